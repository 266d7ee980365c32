"""Exact truncated q-series and a verification catalog for fermionic character identities."""
from .series import QSeries, SeriesError, SubstrateError, TruncationError, NotInvertibleError, format_series
from .qfunctions import QMonomial, gaussian, partition_count, poch_finite, poch_inf, qpoch
from .prodexpr import ParseError, evaluate, parse, render
from .characters import bosonic, central_charge, combo_bosonic, combo_product, conformal_dim, product_char
from .fermionic import DomainError, FermionicFormSpec, PruningError, bmatrix_check, build_form, eval_form
from .verify import VerificationReport, catalog, run_suite, verify

__version__ = "0.1.0"
