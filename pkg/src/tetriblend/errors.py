"""Exception types shared across the library."""


class TetriblendError(Exception):
    """Base class for all library errors."""


class ParseError(TetriblendError):
    """Malformed input file record."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FaceIndexError(ParseError):
    """Face references a vertex that does not exist."""


class CacheFormatError(TetriblendError):
    """Model cache file is missing the magic string or has a bad schema."""


class DegenerateTriangle(TetriblendError):
    """Triangle vertices are collinear within tolerance."""


class AssumptionViolated(TetriblendError):
    """Mesh violates a structural assumption of the chosen tetrisation."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class FoldDegenerate(TetriblendError):
    """Normal sum vanishes; adjacent geometry folds back onto itself."""


class DegenerateTet(TetriblendError):
    """Tetrahedron is (near) coplanar and cannot be inverted."""

    def __init__(self, tet_index, det):
        super().__init__(f"tetrahedron {tet_index} is degenerate (|det| = {abs(det):.3e})")
        self.tet_index = tet_index
        self.det = det


class NotOrientationPreserving(TetriblendError):
    """Matrix has non-positive determinant where a member of GL+(3) is required."""


class NotRotation(TetriblendError):
    """Matrix is not special orthogonal within tolerance."""


class NotSPD(TetriblendError):
    """Matrix is not symmetric positive-definite within tolerance."""


class SingularSystem(TetriblendError):
    """Reduced stitching system is not positive definite (disconnected structure)."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components


class CorrespondenceError(TetriblendError):
    """Input shapes do not share topology with the rest shape."""

    def __init__(self, report):
        issues = ", ".join(str(i) for i in report.issues[:5])
        more = "" if len(report.issues) <= 5 else f" (+{len(report.issues) - 5} more)"
        super().__init__(f"shapes are not blendable: {issues}{more}")
        self.report = report
