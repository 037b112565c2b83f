"""Domain types shared by the solvers, audits and the harness."""

from gradflow.models.certificates import (
    EquivalenceAudit, ETProfileReport, KLCertificate, KLVerification, LevelProfile,
    LSFit, LSFitReport, SampleCloud, Status, TalwegChain,
)
from gradflow.models.decay import DecayComparison, DecayPrediction, Regime
from gradflow.models.grid import (
    BoundaryCondition, ExtinctionAudit, GridFunction, ProxInfo, TVFlowResult, TVInstance,
)
from gradflow.models.measures import (
    DecayAudit, FisherInfo, FreeEnergySpec, InequalityAudit, InequalityRecord,
    Interaction, InternalEnergy, JKOInfo, Potential, QuantileRepr,
)
from gradflow.models.oracles import EnergyOracle, MMConfig, ProxOracle, SlopeEstimate
from gradflow.models.smooth import SmoothEnergy, StabilityReport, TalwegReport
from gradflow.models.trajectory import CSV_COLUMNS, DissipationReport, RefinementStudy, Trajectory

__all__ = [
    'BoundaryCondition', 'CSV_COLUMNS', 'DecayAudit', 'DecayComparison', 'DecayPrediction',
    'DissipationReport', 'EnergyOracle', 'EquivalenceAudit', 'ETProfileReport',
    'ExtinctionAudit', 'FisherInfo', 'FreeEnergySpec', 'GridFunction', 'InequalityAudit',
    'InequalityRecord', 'Interaction', 'InternalEnergy', 'JKOInfo', 'KLCertificate',
    'KLVerification', 'LevelProfile', 'LSFit', 'LSFitReport', 'MMConfig', 'Potential',
    'ProxInfo', 'ProxOracle', 'QuantileRepr', 'RefinementStudy', 'Regime', 'SampleCloud', 'SlopeEstimate',
    'SmoothEnergy', 'StabilityReport', 'Status', 'TalwegChain', 'TalwegReport', 'TVFlowResult',
    'TVInstance', 'Trajectory',
]
