"""Bures and quantum-Chernoff-bound metrics of thermal states, with the
quasi-free thermodynamic limit and the geometry of the (h, T) plane."""

from .numerics import (EigenFrame2, NonConvergence, QuadratureSpec, SymMat2,
                       central_diff, eigen2, integrate)
from .metric import (BuresParts, DenseState, SpectralState, ThermalFamily,
                     bures_ds2, bures_parts, gibbs_state, qcb_ds2,
                     thermal_blocks, thermal_metric_2x2, uhlmann_fidelity)
from .quasifree import (DispersionModel, ModeSystem, ThermoComponents,
                        dense_from_modes, mode_metric, thermodynamic_components,
                        thermodynamic_metric)
from .ising import ISING, metric_at, metric_components
from .geometry import (MetricField, Polyline, ScanGrid, crossover_report,
                       gaussian_curvature, ising_field, ridge_lines, scan,
                       zero_curvature_contours)

__version__ = "0.1.0"
