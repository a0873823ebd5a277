"""chaosbench: precision-controlled benchmark lab for neural forecasting
of chaotic dynamics.

The package has three layers:

* numerics — ``precision``, ``ddouble``, ``dynamics``, ``kernels``:
  single/double/extended-precision RK4 integration of the Lorenz and
  Roessler flows.
* models — ``esn``, ``rnn``: an echo state network with a ridge-trained
  readout, plus from-scratch LSTM and temporal-convolutional forecasters.
* measurement — ``analysis``, ``bench``, ``cli``: prediction horizons,
  Lyapunov spectra, return maps, one-step errors, and a seeded sweep
  harness with CSV reports.
"""

from chaosbench.analysis import (LyapunovSpectrum, ReturnMap, ReturnMapFit,
                                 extract_maxima, fit_return_map,
                                 lyapunov_network, lyapunov_ode,
                                 lyapunov_map, one_step_error,
                                 return_map_error, tau_lim)
from chaosbench.bench import (ExperimentReport, SweepConfig,
                              build_and_train, generate_dataset,
                              param_counts, report, run_sweep,
                              sample_trajectory)
from chaosbench.dynamics import (IntegrationDivergedError, Trajectory,
                                 divergence_series, integrate,
                                 load_trajectory, save_trajectory)
from chaosbench.esn import (EsnConfig, EsnModel, IllConditionedError,
                            InitDegenerateError, init_esn, load_esn,
                            predict_closed_loop, save_esn, spectral_radius,
                            train_readout)
from chaosbench.precision import DOUBLE, EXTENDED, SINGLE, Precision
from chaosbench.rnn import (LstmModel, TcnModel, TrainConfig,
                            TrainingDivergedError, gradient_check,
                            init_lstm, init_tcn, load_rnn, save_rnn,
                            train_rnn)

__version__ = "0.1.0"
