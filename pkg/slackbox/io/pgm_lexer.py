# Copyright 2024, The SlackBox developers.
from sly import Lexer

from slackbox.errors import MalformedFileError


class PGMHeaderLexer(Lexer):
    """
    Lexer for the text header of a netpbm file.

    The header is lexed from the file bytes decoded as latin-1, so token indices are
    byte offsets. Only the header is ever pulled from the token stream; the raster
    behind it is never lexed.
    """

    tokens = {COMMENT, MAGIC, NUMBER, SPACE}

    MAGIC = r"P[1-7]"
    """
    The two character format identifier, e.g. ``P5``.
    """

    NUMBER = r"\d+"
    """
    A decimal width, height, or maxval.
    """

    SPACE = r"[ \t\r\n\v\f]+"
    """
    Any white space.
    """

    COMMENT = r"\#[^\n]*"
    """
    A ``#`` comment running to the end of the line.
    """

    def error(self, t):
        raise MalformedFileError(
            None, f"unexpected character {t.value[0]!r} in PGM header", t.index
        )
