# Copyright 2024, The SlackBox developers.
"""
Binary PGM (``P5``, maxval 255) reading and writing.

Masks are stored as 0 (background) and 255 (foreground). Images in ``[0, 1]`` are
quantized to ``round(255 * x)``, so reading returns multiples of 1/255.
"""
import os

import numpy as np

from slackbox.constants import PGM_MAXVAL
from slackbox.errors import MalformedFileError
from slackbox.io.pgm_lexer import PGMHeaderLexer

_HEADER_FIELDS = ("width", "height", "maxval")
_WHITESPACE = b" \t\r\n\v\f"


def write_pgm(path, pixels):
    """
    Writes an 8 bit grayscale raster.

    :param path: where to write.
    :type path: str, os.PathLike
    :param pixels: ``uint8`` values, shape ``(H, W)``.
    :type pixels: numpy.ndarray
    """
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError(f"A PGM raster must be 2D. Shape {pixels.shape} given.")
    if pixels.dtype != np.uint8:
        raise TypeError(f"PGM pixels must be uint8. {pixels.dtype} given.")
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(pixels).tobytes())


def parse_pgm(data, path=None):
    """
    Parses the bytes of a binary PGM file.

    :param data: the whole file.
    :type data: bytes
    :param path: the file name used in error messages.
    :type path: str
    :rtype: numpy.ndarray
    :raises MalformedFileError: with the byte offset of the first problem.
    """
    text = data.decode("latin-1")
    lexer = PGMHeaderLexer()
    magic = None
    values = []
    last = None
    try:
        for token in lexer.tokenize(text):
            if token.type in {"SPACE", "COMMENT"}:
                continue
            if magic is None:
                if token.type != "MAGIC" or token.value != "P5":
                    raise MalformedFileError(
                        path, f"expected magic 'P5', found {token.value!r}", token.index
                    )
                magic = token
                continue
            if token.type != "NUMBER":
                raise MalformedFileError(
                    path, f"expected a number, found {token.value!r}", token.index
                )
            values.append(int(token.value))
            last = token
            if len(values) == len(_HEADER_FIELDS):
                break
    except MalformedFileError as e:
        if e.path is None and path is not None:
            raise MalformedFileError(path, e.reason, e.offset) from e
        raise
    if magic is None:
        raise MalformedFileError(path, "missing magic number", 0)
    if len(values) < len(_HEADER_FIELDS):
        missing = _HEADER_FIELDS[len(values)]
        raise MalformedFileError(path, f"header ended before {missing}", len(data))
    width, height, maxval = values
    end = last.index + len(last.value)
    if width < 1 or height < 1:
        raise MalformedFileError(path, f"invalid size {width}x{height}", magic.index + 2)
    if maxval != PGM_MAXVAL:
        raise MalformedFileError(
            path, f"only maxval {PGM_MAXVAL} is supported, found {maxval}", last.index
        )
    if end >= len(data) or data[end] not in _WHITESPACE:
        raise MalformedFileError(path, "maxval must be followed by one white space", end)
    start = end + 1
    expected = width * height
    if len(data) - start != expected:
        raise MalformedFileError(
            path,
            f"expected {expected} raster bytes, found {len(data) - start}",
            start,
        )
    return np.frombuffer(data, dtype=np.uint8, offset=start).reshape(height, width).copy()


def read_pgm(path):
    """
    Reads an 8 bit binary PGM file.

    :param path: the file to read.
    :type path: str, os.PathLike
    :rtype: numpy.ndarray
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_pgm(data, os.fspath(path))


def write_mask(path, mask):
    """
    Writes a binary mask as 0/255.
    """
    write_pgm(path, np.where(np.asarray(mask) != 0, PGM_MAXVAL, 0).astype(np.uint8))


def read_mask(path):
    """
    Reads a mask written by :func:`write_mask`.

    :rtype: numpy.ndarray
    :raises MalformedFileError: if a pixel is neither 0 nor 255.
    """
    pixels = read_pgm(path)
    bad = (pixels != 0) & (pixels != PGM_MAXVAL)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise MalformedFileError(
            os.fspath(path),
            f"mask pixel ({row}, {col}) is {pixels[row, col]}, expected 0 or {PGM_MAXVAL}",
        )
    return pixels == PGM_MAXVAL


def quantize_image(image):
    """
    Maps intensities in ``[0, 1]`` to ``uint8``.

    :rtype: numpy.ndarray
    """
    image = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    return np.round(image * PGM_MAXVAL).astype(np.uint8)


def write_image(path, image):
    """
    Writes a grayscale image with intensities in ``[0, 1]``.
    """
    write_pgm(path, quantize_image(image))


def read_image(path):
    """
    Reads a grayscale image as intensities in ``[0, 1]``.

    :rtype: numpy.ndarray
    """
    return read_pgm(path).astype(float) / PGM_MAXVAL
