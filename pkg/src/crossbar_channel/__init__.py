"""Channel models, capacity, and read-threshold optimization for 1S1R crossbars."""

__version__ = "0.1.0"

from .cascade import (CapacityResult, CascadeParams, averaged_capacity,
                      capacity_grid, cascade, cell_capacity, mutual_information)
from .circuit import (BiasScheme, KclSolution, ResistanceGrid,
                      SingularSystemError, cumulative_line_resistance,
                      effective_write_voltage_ideal, line_resistance_grid,
                      read_current_ideal, solve_kcl_grid)
from .config import (ArrayGeometry, ConfigError, DeviceModel, OperatingPoint,
                     ParameterBundle, default_bundle, load_config, save_config,
                     validate)
from .oracle import (EmpiricalBac, EmpiricalRate, SamplingPlan,
                     estimate_channel_grid, simulate_read, simulate_write)
from .read_channel import (ReadChannelParams, SampleBudgetError, detect,
                           read_channel_params_general,
                           read_channel_params_ideal, read_error_probabilities)
from .sweeps import (ChannelGrid, SweepSpec, compute_channel_grid,
                     run_aspect_ratio_study, run_capacity_sweep, run_heatmap,
                     run_threshold_comparison)
from .thresholds import (StmcResult, ThresholdPreconditionError,
                         ThresholdScheme, baseline_threshold, dtec_threshold,
                         dtec_threshold_grid, make_scheme, scheme_average_ber,
                         stmc_approx, stmc_exact, stmc_exact_per_column)
from .write_channel import (WriteChannelParams, conditional_switch_failures,
                            marginal_switch_failures, median_switch_time,
                            same_state_write,
                            switch_fail_prob_given_resistance,
                            write_channel_params)

__all__ = [name for name in dir() if not name.startswith("_")]
