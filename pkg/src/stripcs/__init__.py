"""Deterministic compressed sensing with statistical near-isometry guarantees.

Column-oracle sensing matrices built from discrete chirps, Delsarte-
Goethals / Kerdock sets, dual extended-BCH codes, and random DFT rows;
certification of their structural conditions; closed-form tail bounds with
Monte-Carlo validation; and a sublinear quadratic reconstruction decoder.
"""

__version__ = "0.1.0"

from .algebra import (BinarySymmetricMatrix, BinaryVector, GF2m, GF2mElement,
                      gf2_rank, gf2m_mul, gf2m_trace, hermitian_eigenvalues,
                      z4_form_eval)
from .concentration import (DistinctTupleSampler, gaussian_tail_S,
                            hoeffding_bound, hoeffding_columnsum_bound,
                            mcdiarmid_bound, mcdiarmid_empirical,
                            noise_bound_probability)
from .ensembles import (SensingMatrix, build_bch, build_chirp,
                        build_delsarte_goethals, build_dg_full,
                        build_gaussian, build_partial_fourier, column,
                        matrix_from_spec, subsample_columns)
from .recon import (Measurement, ReconResult, SparseSignal,
                    crossterm_energy_check, error_bound, measure,
                    quadratic_reconstruct, sample_signal, shift_multiply,
                    synthesize, synthesize_dense)
from .stripcheck import (BoundReport, StripCertificate, bound_report, certify,
                         coherence_stats, condition_experiment,
                         expected_energy, strip_delta, strip_delta_sharpened,
                         strip_montecarlo, uniqueness_bruteforce)
from .wht import fwht, naive_wht

__all__ = [name for name in dir() if not name.startswith("_")]
