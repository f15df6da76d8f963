"""Spectra, nodal domains and spectral minimal partitions of thin cylinders and annuli."""

from .catalog import (
    SpectrumEntry, annulus_spectrum_round, circle_partition_eigenvalue, courant_sharp_classification,
    cylinder_spectrum, dn_sufficient_condition, predicted_L3, thin_threshold,
)
from .discretization import (
    DomainSpec, Grid, SymmetricOperator, annulus, assemble, build_grid, deck_split,
    lift_to_cover, restrict_to_subdomain, strip,
)
from .eigensolver import EigenPair, cluster, groundstate, lowest_eigenpairs
from .errors import (
    DegenerateInput, InvalidArgument, InvalidDomain, InvalidPartition, NumericalFailure,
    StructuralError, ThinpartError,
)
from .nodal import courant_sharp_check, homotopy_class, is_bipartite, neighbor_graph, nodal_domains
from .partition import (
    PartitionState, compare_with_theory, iterate, niceness_check, partition_energy,
    property_B_check,
)
from .scenarios import ScenarioReport, list_scenarios, run_scenario

__version__ = "0.1.0"
