"""Budget and default-parameter configuration.

All limits are explicit: operations refuse (raise BudgetError) instead of
truncating. The defaults are conservative because theory computation is
exponential in depth by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import BudgetError, ParseError


@dataclass(frozen=True)
class Config:
    # theory computation
    n_max: int = 3                  # maximum theory depth
    depth2_size_max: int = 8        # |universe| cap when depth >= 2
    theory_bits_max: int = 20       # 2^(size*depth) iteration guard

    # structure enumeration: sum over predicates of size^arity, in bits
    enum_bits_max: int = 24

    # formal theory spaces / scheme enumeration
    formal_budget: int = 2 ** 20
    scheme_budget: int = 2 ** 20

    # MSO evaluation: size * (number of nested set quantifiers), in bits
    eval_bits_max: int = 22

    # decomposability search
    decomp_size_max: int = 24
    decomp_k_max: int = 3

    # number-set engine
    scan_default: int = 200
    window_default: int = 16
    pump_tree_cap: int = 100_000

    # spectra
    spectrum_scan: int = 96
    spectrum_window: int = 16

    k_star_max: int = 4             # largest supported constant count
    include_empty_model: bool = False
    jobs: int = 1

    def check(self, budget: str, needed, limit) -> None:
        if needed > limit:
            raise BudgetError(budget, needed, limit)


DEFAULT = Config()


def load_config(path, base: Config = DEFAULT) -> Config:
    """Read key=value lines (comments with '#') into a Config."""
    overrides = {}
    fields = {f: type(getattr(base, f)) for f in base.__dataclass_fields__}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ParseError(f"unknown config key {key!r}", lineno)
            kind = fields[key]
            try:
                overrides[key] = kind(value) if kind is not bool else value.lower() in ("1", "true", "yes")
            except ValueError as exc:
                raise ParseError(f"bad value for {key}: {exc}", lineno)
    return replace(base, **overrides)
