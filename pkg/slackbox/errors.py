# Copyright 2024, The SlackBox developers.


class EmptyAnnotationError(ValueError):
    """
    Raised when a box covers no pixel of the image it is rasterized into.
    """

    def __init__(self, box, height, width):
        self.box = box
        self.message = (
            f"empty annotation: {box} covers no pixel centre of a {height}x{width} image."
        )
        super().__init__(self.message)


class InvalidScaleError(ValueError):
    """
    Raised when the unconfident scale is outside of ``[0, 0.5)``.
    """

    def __init__(self, scale):
        self.scale = scale
        if scale >= 0.5:
            self.message = (
                f"bands would cross box center: unconfident scale {scale} must be < 0.5."
            )
        else:
            self.message = f"The unconfident scale must be non-negative. {scale} given."
        super().__init__(self.message)


class ShapeMismatchError(ValueError):
    """
    Raised when two rasters that must share a shape do not.
    """

    def __init__(self, expected, received, what="raster"):
        self.message = (
            f"The {what} must have shape {tuple(expected)}. {tuple(received)} given."
        )
        super().__init__(self.message)


class DegenerateMapError(ValueError):
    """
    Raised when a map is too small for the finite difference kernels.
    """

    def __init__(self, shape):
        self.message = f"The map must be at least 2x2 for difference kernels. Shape {tuple(shape)} given."
        super().__init__(self.message)


class NoSupervisedPixelsError(ValueError):
    """
    Raised when the consistency constraint is asked to run over an empty support.
    """

    def __init__(self, message="no supervised pixels: the support region is empty."):
        self.message = message
        super().__init__(self.message)


class DestroyedAnnotationError(ValueError):
    """
    Raised when a perturbed box no longer overlaps the image by a full pixel.
    """

    def __init__(self, box, attempts=1):
        self.box = box
        self.attempts = attempts
        self.message = f"noise destroyed annotation: {box} after {attempts} draw(s)."
        super().__init__(self.message)


class UndefinedDistanceError(ValueError):
    """
    Raised when the Hausdorff distance is requested for an empty mask.
    """

    def __init__(self):
        self.message = "undefined HD: both masks must contain at least one pixel."
        super().__init__(self.message)


class MalformedFileError(ValueError):
    """
    Raised when a file on disk can not be parsed.

    :param path: the path of the broken file, if known.
    :type path: str
    :param message: what went wrong.
    :type message: str
    :param offset: the byte offset of the problem, if known.
    :type offset: int
    """

    def __init__(self, path, message, offset=None):
        self.path = path
        self.offset = offset
        self.reason = message
        location = f"{path}" if path else "<stream>"
        if offset is not None:
            location = f"{location}, byte {offset}"
        self.message = f"{location}: {message}"
        super().__init__(self.message)


class ConfigurationError(ValueError):
    """
    Raised when a training configuration is invalid or self-contradicting.
    """

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class AnnotationResampledWarning(UserWarning):
    """
    Issued when a noisy box had to be drawn again because the first draw left the image.
    """

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)
