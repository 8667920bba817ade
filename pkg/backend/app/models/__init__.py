"""
Domain data types
"""
from .spatial import Locations, KernelSpec, KernelFamily, TaperSpec, TaperKind, RegionRule, SUPPORTED_NU
from .approximation import Projector, StructuredCov, CovForm, FactorCache
from .regression import RegressionData, Params, PriorSpec, InverseGamma
from .chain import Chain, SamplerConfig, ApproxSettings, chain_columns

__all__ = [
    'Locations', 'KernelSpec', 'KernelFamily', 'TaperSpec', 'TaperKind', 'RegionRule', 'SUPPORTED_NU',
    'Projector', 'StructuredCov', 'CovForm', 'FactorCache',
    'RegressionData', 'Params', 'PriorSpec', 'InverseGamma',
    'Chain', 'SamplerConfig', 'ApproxSettings', 'chain_columns',
]
