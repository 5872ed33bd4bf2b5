"""Deterministic simulator for ultrasonically charged optogenetic implant
networks: tissue photonics, energy harvesting, capacitor dynamics, charging
protocols and their evaluation metrics."""

from .energy import (CapacitorState, EnergyParams, charge_per_cycle,
                     cycles_to_charge, cycles_to_discharge, discharge_pulse,
                     generated_current, harvested_electrical_power,
                     intensity_at_depth, led_pulse_energy_j, step_slot,
                     voltage_at_cycle)
from .engine import DeviceState, SimTrace, replay, run
from .errors import ConfigError, PhysicsError, TraceError, Violation
from .metrics import AggregateStats, MetricsReport, aggregate, compute_metrics
from .model import (Layer, LAYER_ORDER, RasterPlot, SimConfig, config_from_mapping,
                    config_to_mapping, parse_config_text, render_config_text,
                    validate_config)
from .photonics import (OpticsParams, dpf, required_source_intensity,
                        transmittance)
from .protocols import (CORTICAL_FLOW_WEIGHTS, LayerSequence, Pattern,
                        PatternBank, ProtocolDecision, TransitionMatrix,
                        build_markov_bank, charge_and_fire_step,
                        connection_distribution, match_score, psdw_step,
                        random_pattern_bank, rank_layer_sequences)
from .spikegen import (KeatParams, SpikeRateProfile, direction_switch_scenario,
                       generate_poisson_raster, keat_filter_response,
                       keat_spikes, split_seed)

__version__ = "0.1.0"
