"""
DRF serializers validating every file the commands read and shaping every document they write.
"""
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np
import pandas as pd
from rest_framework import serializers

from .aging import AgingParams, LfpAgingParams, LmoAgingParams
from .charging import ChargingSession, OptimizerConfig
from .choices import ChargeMode, Chemistry, Strategy
from .exceptions import ConfigurationError
from .helpers import get_errors_formatted, read_json
from .pack import build_pack
from .records import ChargingRecord
from .simulation import ScenarioConfig

RECORD_COLUMNS = ['start_soc', 'end_soc', 'duration_h', 'mode', 'gap_to_next_h']


def _validated(serializer, source):
    if not serializer.is_valid():
        raise ConfigurationError(f'{source} failed validation.', document=get_errors_formatted(serializer))
    return serializer.save()


def _float_fields(cls):
    return {
        item.name: serializers.FloatField(default=item.default)
        for item in dataclass_fields(cls)
    }


LfpAgingParamsSerializer = type('LfpAgingParamsSerializer', (serializers.Serializer,), _float_fields(LfpAgingParams))
LmoAgingParamsSerializer = type('LmoAgingParamsSerializer', (serializers.Serializer,), _float_fields(LmoAgingParams))


class AgingParamsSerializer(serializers.Serializer):
    lfp = LfpAgingParamsSerializer(required=False)
    lmo = LmoAgingParamsSerializer(required=False)
    calendar_multiplier = serializers.FloatField(default=1.0, min_value=0.0)
    cyclic_multiplier = serializers.FloatField(default=1.0, min_value=0.0)

    def create(self, validated_data):
        return AgingParams(
            lfp=LfpAgingParams(**validated_data.pop('lfp', {})),
            lmo=LmoAgingParams(**validated_data.pop('lmo', {})),
            **validated_data,
        )


class ScenarioConfigSerializer(serializers.Serializer):
    chemistry = serializers.ChoiceField(choices=Chemistry.choices, default=Chemistry.LFP)
    n_cells = serializers.IntegerField(default=20, min_value=2)
    q_no = serializers.FloatField(default=2.3, min_value=0.0)
    r0 = serializers.FloatField(default=0.01, min_value=0.0)
    soh_eol = serializers.FloatField(default=0.70, min_value=0.0, max_value=1.0)
    knee_soh = serializers.FloatField(default=0.75, min_value=0.0, max_value=1.0)
    sigma_gamma = serializers.FloatField(default=0.10, min_value=0.0)
    temp_mean_c = serializers.FloatField(default=35.0)
    temp_std_c = serializers.FloatField(default=2.0, min_value=0.0)
    rest_temp_c = serializers.FloatField(default=25.0)
    soh_noise_std = serializers.FloatField(default=0.0, min_value=0.0)
    strategy = serializers.ChoiceField(choices=Strategy.choices, default=Strategy.SOC_SOH_AWARE)
    dc_fast_fraction = serializers.FloatField(default=81 / 255, min_value=0.0, max_value=1.0)
    calendar_multiplier = serializers.FloatField(default=1.0, min_value=0.0)
    cyclic_multiplier = serializers.FloatField(default=1.0, min_value=0.0)
    seed = serializers.IntegerField(default=0, min_value=0)
    n_records = serializers.IntegerField(default=255, min_value=1)
    discharge_crate = serializers.FloatField(default=0.3, min_value=0.0)
    stages = serializers.IntegerField(default=4, min_value=1)
    conservative_discharge = serializers.BooleanField(default=False)

    def validate_soh_eol(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('Must lie strictly between 0 and 1.')
        return value

    def create(self, validated_data):
        return ScenarioConfig(**validated_data)


class ChargingRecordSerializer(serializers.Serializer):
    start_soc = serializers.FloatField(min_value=0.0, max_value=1.0)
    end_soc = serializers.FloatField(min_value=0.0, max_value=1.0)
    duration_h = serializers.FloatField(min_value=0.0)
    mode = serializers.ChoiceField(choices=ChargeMode.choices)
    gap_to_next_h = serializers.FloatField(min_value=0.0)

    def validate(self, attrs):
        if attrs['end_soc'] <= attrs['start_soc']:
            raise serializers.ValidationError({'end_soc': ['Must be greater than start_soc.']})
        if attrs['duration_h'] <= 0:
            raise serializers.ValidationError({'duration_h': ['Must be positive.']})
        return attrs

    def create(self, validated_data):
        return ChargingRecord(**validated_data)


class CellInputSerializer(serializers.Serializer):
    soh = serializers.FloatField(min_value=0.0, max_value=1.0)
    soc = serializers.FloatField(min_value=0.0, max_value=1.0)
    gamma = serializers.FloatField(default=1.0, min_value=0.0)
    temperature_active_c = serializers.FloatField(default=35.0)


class SessionSerializer(serializers.Serializer):
    target_pack_soc = serializers.FloatField(min_value=0.0, max_value=1.0)
    t_total = serializers.FloatField(min_value=0.0)
    soh_estimate = serializers.ListField(child=serializers.FloatField(min_value=0.0, max_value=1.0), required=False)
    fast_charge = serializers.BooleanField(default=False)


class OptimizerConfigSerializer(serializers.Serializer):
    m = serializers.IntegerField(default=4, min_value=1)
    kappa = serializers.FloatField(default=0.1)
    epsilon = serializers.FloatField(default=1e-3)
    big_m = serializers.FloatField(default=1e6)
    u_phase_max = serializers.FloatField(required=False, min_value=0.0)
    u_phase_step = serializers.FloatField(required=False, min_value=0.0)
    i_cc_grid = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False)
    discharge_avg_crate = serializers.FloatField(default=0.3, min_value=0.0)
    conservative_discharge = serializers.BooleanField(default=False)
    u_dis_phase = serializers.FloatField(required=False, min_value=0.0)


class PackStateSerializer(serializers.Serializer):
    chemistry = serializers.ChoiceField(choices=Chemistry.choices, default=Chemistry.LFP)
    nominal_capacity_ah = serializers.FloatField(default=2.3, min_value=0.0)
    internal_resistance_ohm = serializers.FloatField(default=0.01, min_value=0.0)
    temperature_rest_c = serializers.FloatField(default=25.0)
    soh_eol = serializers.FloatField(default=0.70, min_value=0.0, max_value=1.0)
    cells = CellInputSerializer(many=True)
    session = SessionSerializer()
    optimizer = OptimizerConfigSerializer(required=False)

    def validate(self, attrs):
        if not attrs['cells']:
            raise serializers.ValidationError({'cells': ['At least one cell is required.']})
        estimate = attrs['session'].get('soh_estimate')
        if estimate is not None and len(estimate) != len(attrs['cells']):
            raise serializers.ValidationError({'session': ['soh_estimate needs one value per cell.']})
        return attrs

    def create(self, validated_data):
        cells = validated_data.pop('cells')
        session = validated_data.pop('session')
        optimizer = validated_data.pop('optimizer', {})
        if 'i_cc_grid' in optimizer:
            optimizer['i_cc_grid'] = tuple(optimizer['i_cc_grid'])
        pack = build_pack(
            len(cells),
            soh=[cell['soh'] for cell in cells],
            soc=[cell['soc'] for cell in cells],
            gamma=[cell['gamma'] for cell in cells],
            temperature_active_c=[cell['temperature_active_c'] for cell in cells],
            **validated_data,
        )
        if session.get('soh_estimate') is not None:
            session['soh_estimate'] = np.asarray(session['soh_estimate'])
        return pack, ChargingSession(**session), OptimizerConfig(**optimizer)


class FloatListField(serializers.ListField):
    child = serializers.FloatField()

    def to_representation(self, data):
        return [float(value) for value in np.asarray(data, dtype=float).reshape(-1)]


class MatrixField(serializers.Field):
    def to_representation(self, value):
        return np.asarray(value, dtype=float).tolist()


class StageGridSerializer(serializers.Serializer):
    m = serializers.IntegerField()
    soc_max = FloatListField()
    crate_avg = FloatListField()


class ChargePlanSerializer(serializers.Serializer):
    q = MatrixField()
    u_phase = serializers.FloatField()
    i_cc = serializers.FloatField()
    stage_durations = FloatListField()
    objective_value = serializers.FloatField()
    total_charge = serializers.FloatField()
    duration_h = serializers.FloatField()
    grid = StageGridSerializer()
    stage_duties = serializers.SerializerMethodField()
    discharge_duties = serializers.SerializerMethodField()
    active = serializers.SerializerMethodField()

    def get_stage_duties(self, plan):
        return [[float(duty) for duty in pattern.duties] for pattern in plan.stage_duties]

    def get_discharge_duties(self, plan):
        return [float(duty) for duty in plan.discharge_duties.duties]

    def get_active(self, plan):
        return [bool(flag) for flag in plan.active]


class SimResultSerializer(serializers.Serializer):
    scenario = ScenarioConfigSerializer()
    lifetime_days = serializers.FloatField()
    lifetime_efc = serializers.FloatField()
    sessions = serializers.IntegerField()
    sessions_unoptimized = serializers.IntegerField()
    final_soh_spread = serializers.FloatField()
    failed_cells_at_eol = serializers.IntegerField()
    stalls = serializers.IntegerField()
    final_soh = serializers.SerializerMethodField()

    def get_final_soh(self, result):
        return [float(value) for value in result.soh_trajectories[-1]]


def load_aging_params(path):
    return _validated(AgingParamsSerializer(data=read_json(path)), path)


def load_scenario(path=None, **overrides):
    data = read_json(path) if path is not None else {}
    data.update({key: value for key, value in overrides.items() if value is not None})
    return _validated(ScenarioConfigSerializer(data=data), path or 'scenario')


def load_pack_state(path):
    return _validated(PackStateSerializer(data=read_json(path)), path)


def load_records_csv(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'No such file: {path}')
    frame = pd.read_csv(path, comment='#')
    missing = [column for column in RECORD_COLUMNS if column not in frame.columns]
    if missing:
        raise ConfigurationError(f'{path} lacks the columns {", ".join(missing)}.')
    rows = frame[RECORD_COLUMNS].to_dict(orient='records')
    return _validated(ChargingRecordSerializer(data=rows, many=True), path)


def load_profile_csv(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'No such file: {path}')
    frame = pd.read_csv(path, comment='#')
    if 'crate' not in frame.columns:
        raise ConfigurationError(f'{path} has no "crate" column.')
    profile = frame['crate'].to_numpy(dtype=float)
    if not len(profile) or np.any(~np.isfinite(profile)) or np.any(profile < 0):
        raise ConfigurationError(f'{path} must hold non-negative, finite C-rates.')
    return profile
