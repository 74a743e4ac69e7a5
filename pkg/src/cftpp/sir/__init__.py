"""Networked SIR epidemics: contact networks, outbreaks, counterfactuals and interventions."""
from .network import (ContactNetwork, Geography, SbmProbabilities, bundled_geography,
                      generate_network, load_geography)
from .epidemic import Outbreak, SirParams, counterfactual_outbreak, sample_outbreak, seed_nodes
from .interventions import (ContactReductionGlobal, DistrictIsolation, EdgeRates, Vaccination,
                            apply_intervention, intervention_from_config)
from .calibration import calibrate, estimate_r0

__all__ = [
    "ContactNetwork", "Geography", "SbmProbabilities", "bundled_geography", "generate_network",
    "load_geography", "Outbreak", "SirParams", "counterfactual_outbreak", "sample_outbreak",
    "seed_nodes", "ContactReductionGlobal", "DistrictIsolation", "EdgeRates", "Vaccination",
    "apply_intervention", "intervention_from_config", "calibrate", "estimate_r0",
]
