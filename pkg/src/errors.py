# src/errors.py
# Exception hierarchy shared by the library and the CLI.
# Each family carries the process exit code the CLI reports for it.


class PadicxError(Exception):
    exit_code = 1

    def __init__(self, message: str = "", violations=None):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        # Optional list of human-readable constraint violations (validate() reports)
        self.violations = list(violations or [])


# --- exit code 1: bad input, failed structural checks ---

class ValidationError(PadicxError):
    exit_code = 1

class DivisionByZero(ValidationError): pass
class PrimeMismatch(ValidationError): pass
class ZeroResidue(ValidationError): pass
class ZeroInput(ValidationError): pass
class SingularMatrix(ValidationError): pass
class NotHyperbolic(ValidationError): pass
class BadMomentIndex(ValidationError): pass
class Z0InQp(ValidationError): pass
class ZeroSchneider(ValidationError): pass
class IntegralJInvariant(ValidationError): pass
class DomainViolation(ValidationError): pass
class NotMultiplicative(ValidationError): pass
class CharacterNotEmbeddable(ValidationError): pass
class MissingLevel(ValidationError): pass
class LevelUnavailable(ValidationError): pass
class InconsistentCase(ValidationError): pass
class InvalidCocycle(ValidationError): pass
class PoleAtS(ValidationError): pass
class DivergentParameters(ValidationError): pass
class MissingParam(ValidationError): pass
class RowSumNonzero(ValidationError): pass
class InvalidFile(ValidationError): pass


# --- exit code 2: series, Riemann sums or level sums did not reach precision ---

class ConvergenceError(PadicxError):
    exit_code = 2

class ConvergenceDomain(ConvergenceError): pass
class OutOfTable(ConvergenceError): pass
class DepthTooShallow(ConvergenceError): pass


class NoStabilization(ConvergenceError):
    # Level sums never agreed; keeps the best value for the report
    def __init__(self, message: str = "", best=None, gap=None, level=None):
        super().__init__(message)
        self.best = best
        self.gap = gap
        self.level = level


# --- exit code 3: command line misuse ---

class UsageError(PadicxError):
    exit_code = 3
