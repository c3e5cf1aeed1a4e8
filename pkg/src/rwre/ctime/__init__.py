"""Continuous-time walks, the slowed process and zero-range environments."""
from .environment import (ConstantRates, ContinuousEnvironment, IIDRates, JumpChainEnvironment, ModulatedRates,
                          UniformizedEnvironment, check_balanced_ct)
from .simulate import (CTPath, ExplosionReport, SlowedPath, clock_checkpoints, ct_covariance, explosion_report,
                       run_batch, simulate_ct, simulate_ct_batch, slowed_batch, slowed_exit_constant,
                       slowed_exit_statistic, slowed_paths, slowed_process, unslow)
from .zerorange import (LocalRates, RateFunction, ZeroRangeEnvironment, ZeroRangeState, ZRPWalkerResult,
                        local_rate_samples, occupation_law, partition_function, sample_mu_alpha,
                        simulate_zero_range, zero_range_env, zrp_slowed_walkers)
from .moments import (MomentReport, constant_sampler, iid_sampler, make_sampler, moment_condition_ct,
                      moment_statistic, zrp_sampler)
