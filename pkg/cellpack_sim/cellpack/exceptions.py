from django.utils.encoding import force_str


class CellpackError(Exception):
    default_detail = 'The simulation failed.'
    default_code = 'error'
    exit_code = 1

    def __init__(self, detail=None, code=None):
        self.detail = force_str(detail if detail is not None else self.default_detail)
        self.code = code or self.default_code
        super().__init__(self.detail)

    def get_full_details(self):
        return {'code': self.code, 'detail': self.detail}


class InvalidParameterError(CellpackError, ValueError):
    default_detail = 'A parameter is outside its valid range.'
    default_code = 'invalid'


class OcvDomainError(InvalidParameterError):
    default_detail = 'SOC must lie in [0, 1] to evaluate the OCV curve.'
    default_code = 'ocv_domain'


class AgingDomainError(InvalidParameterError):
    default_detail = 'The aging event lies outside the validity region of the model.'
    default_code = 'aging_domain'


class LpNumericalError(CellpackError):
    default_detail = 'The LP solution violates its constraints beyond tolerance.'
    default_code = 'lp_numerical'


class InfeasiblePlanError(CellpackError):
    default_detail = 'No phase voltage and CC current make the charging LP feasible.'
    default_code = 'infeasible'
    exit_code = 2


class RuntimeGuardError(CellpackError):
    default_detail = 'The simulated lifetime exceeded the runtime guard.'
    default_code = 'runtime_guard'
    exit_code = 3


class ConfigurationError(CellpackError):
    default_detail = 'A configuration file failed validation.'
    default_code = 'invalid_config'

    def __init__(self, detail=None, code=None, document=None):
        super().__init__(detail, code)
        self.document = document
