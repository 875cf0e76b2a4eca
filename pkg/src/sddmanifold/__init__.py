"""Charts for the solution manifold of x'(t) = g(x(t - d(x(t))))."""
from .funcspace import (Segment, TailTerm, axpy, make_segment, norm_c, norm_c1,
                        read_segment_csv, resample, write_segment_csv, zero_segment)
from .problem import (Problem, builtin_problem, df_apply, f_eval, load_config,
                      make_manifold_point, make_problem, residual_Xf, tangent_residual)
from .almostgraph import invert_h, h_eta, map_A, map_B, verify_roundtrip

__version__ = "0.1.0"
