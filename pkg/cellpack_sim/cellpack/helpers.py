from pathlib import Path
from io import BytesIO
from asgiref.sync import sync_to_async
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from .exceptions import InvalidParameterError


class ResultRenderer(JSONRenderer):
    def get_indent(self, accepted_media_type, renderer_context):
        return 2


def get_errors_formatted(serializer):
    errors_template = {"jsonapi": {"version": "1.1"}, 'errors': []}
    if not hasattr(serializer, '_errors'):
        msg = 'You must call `.is_valid()` before accessing `.errors`.'
        raise AssertionError(msg)
    error_details = []
    for pointer, message in _flatten_errors(serializer.errors):
        error_details.append({
            'code': 400,
            'source': {'pointer': pointer},
            'detail': 'The JSON field "{0}" caused an exception: {1}'.format(
                pointer.rsplit('/', 1)[-1] or 'data', message.lower()
            ),
        })
    if not error_details:
        return None
    errors_template['errors'] = error_details
    return errors_template


def _flatten_errors(errors, prefix=''):
    if isinstance(errors, dict):
        for key, val in errors.items():
            key = 'data' if key == 'non_field_errors' else key
            yield from _flatten_errors(val, f'{prefix}/{key}')
    elif isinstance(errors, list) and errors and not isinstance(errors[0], (str, bytes)):
        for index, val in enumerate(errors):
            yield from _flatten_errors(val, f'{prefix}/{index}')
    elif isinstance(errors, list):
        for message in errors:
            yield prefix or '/data', str(message)
    else:
        yield prefix or '/data', str(errors)


def render_json(data):
    return ResultRenderer().render(data) + b'\n'


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'No such file: {path}')
    try:
        return JSONParser().parse(BytesIO(path.read_bytes()))
    except Exception as exc:
        raise InvalidParameterError(f'{path} is not valid JSON: {exc}') from exc


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_json(data))
    return path


SCENARIO_PREFIX = '# scenario: '


def write_csv(path, frame, scenario=None):
    """
    Writes ``frame`` without its index. A ``scenario`` mapping goes first as one compact JSON
    comment line, so ``pandas.read_csv(path, comment='#')`` still reads the table.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as stream:
        if scenario is not None:
            stream.write(SCENARIO_PREFIX + JSONRenderer().render(scenario).decode() + '\n')
        frame.to_csv(stream, index=False, lineterminator='\n')
    return path


def read_csv_scenario(path):
    """Returns the scenario embedded by ``write_csv``, or ``None``."""
    with Path(path).open() as stream:
        first = stream.readline()
    if not first.startswith(SCENARIO_PREFIX):
        return None
    return JSONParser().parse(BytesIO(first[len(SCENARIO_PREFIX):].encode()))


aread_json, awrite_json, awrite_csv = sync_to_async(read_json), sync_to_async(write_json), sync_to_async(write_csv)
