"""Exception types shared across the package."""


class HintikkaError(Exception):
    """Base class for domain errors."""


class ParseError(HintikkaError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SignatureError(HintikkaError):
    """Structures, theories, or schemes with incompatible signatures."""


class BudgetError(HintikkaError):
    """Explicit refusal: a computation would exceed a configured budget.

    Never a silent truncation; carries the budget name, the value the
    request needs, and the configured limit.
    """

    def __init__(self, budget, needed, limit):
        self.budget = budget
        self.needed = needed
        self.limit = limit
        super().__init__(f"budget '{budget}' exceeded: need {needed}, limit {limit}")
