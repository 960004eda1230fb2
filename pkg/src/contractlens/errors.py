"""Exception types shared across the package."""


class ContractLensError(Exception):
    """Base class for all errors raised by this package."""


class NonHexInput(ContractLensError):
    """Bytecode text is not valid hex (odd length or illegal character)."""


class DimensionMismatch(ContractLensError):
    """Matrix/vector shapes do not line up."""


class MalformedAst(ContractLensError):
    """AST document violates the expected type/kind/children schema."""


class EmptyCorpus(ContractLensError):
    """Keyword scoring requested on a corpus with no tokens."""


class TooFewSamples(ContractLensError):
    """Not enough minority samples for SMOTE interpolation."""


class DuplicateRecord(ContractLensError):
    """A store already holds a record with this contract name."""


class RecordNotFound(ContractLensError):
    """No record with this contract name in the store."""


class EmptyDataset(ContractLensError):
    """Training requested on an empty dataset."""


class DegenerateLabels(ContractLensError):
    """Only one class present where two are required."""


class ModelMissing(ContractLensError):
    """A trained model file is required but absent or unreadable."""


class ConfigError(ContractLensError):
    """Pipeline configuration is invalid (unknown key, missing file, bad value)."""
