"""Exception hierarchy.

Certificate errors (Markov, expansion, ordering, codes) map to CLI exit code 2,
everything else that is raised deliberately maps to exit code 3.
"""


class TeichfunError(Exception):
    """Base class for all deliberate failures."""


class InputError(TeichfunError):
    pass


class CertificateError(TeichfunError):
    pass


# geometry
class NotHyperbolic(CertificateError):
    pass


class DegenerateGeodesic(CertificateError):
    pass


# group construction / input
class InvalidGenus(InputError):
    pass


class UnknownLabel(InputError):
    pass


class EmptyWord(InputError):
    pass


class InvalidMap(InputError):
    pass


class ConstructionFailure(CertificateError):
    pass


# Markov partition
class NetIncomplete(CertificateError):
    pass


class UncoveredInterval(CertificateError):
    pass


class MarkovFailure(CertificateError):
    pass


class ExpansionFailure(CertificateError):
    pass


class NotTransitive(CertificateError):
    pass


class OrderViolation(CertificateError):
    pass


class CodeFailure(CertificateError):
    pass


class CombinatoricsMismatch(CertificateError):
    pass


# symbolic / thermodynamic
class Inadmissible(InputError):
    pass


class DepthMismatch(InputError):
    pass


class NotIrreducible(CertificateError):
    pass


class ConvergenceFailure(CertificateError):
    pass


# quasisymmetric bounds
class InvalidM(InputError):
    pass


class InvalidK(InputError):
    pass
