# services/export/export.py

import json
import logging

import pandas as pd

from services.distill.key_buffer import KeyBuffer, KeyStage
from services.errors import DistillError

logger = logging.getLogger('Export')  # pylint: disable=no-member

CSV_FLOAT_FORMAT = '%.12g'
METADATA_PREFIX = '# '


def _metadata_lines(metadata):
    """
    Flattens nested metadata to '# key.sub = value' comment lines.
    """
    lines = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for key in value:
                walk(f"{prefix}.{key}" if prefix else str(key), value[key])
        else:
            lines.append(f"{METADATA_PREFIX}{prefix} = {json.dumps(value)}")

    walk('', metadata or {})
    return lines


def export_to_csv(data, columns, filename, metadata=None):
    """
    Exports rows to a CSV file with 12 significant digits per float.

    :param data: A DataFrame or a list of dicts, e.g. [{col1: val1, col2: val2}, ...]
    :param columns: A list of column names (strings).
    :param filename: Target CSV file path.
    :param metadata: Optional nested dict written as leading '#' comment lines.
    """
    with open(filename, 'w', encoding='utf-8', newline='') as file_obj:
        frame = write_csv(data, columns, file_obj, metadata)
    logger.info(f"Wrote {len(frame)} rows to {filename}")


def write_csv(data, columns, file_obj, metadata=None):
    """
    Writes metadata comment lines and the CSV body to an open text stream.
    """
    frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data))
    frame = frame.reindex(columns=columns)
    for line in _metadata_lines(metadata):
        file_obj.write(line + '\n')
    frame.to_csv(file_obj, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    return frame


def read_csv_export(filename):
    """
    Reads a file written by export_to_csv back into (DataFrame, metadata).
    """
    metadata = {}
    with open(filename, 'r', encoding='utf-8') as file_obj:
        for line in file_obj:
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, value = line[len(METADATA_PREFIX):].rstrip('\n').partition(' = ')
            metadata[key] = json.loads(value)
    frame = pd.read_csv(filename, comment='#')
    return frame, metadata


def export_table_json(frame, filename, metadata=None):
    """
    Writes {"metadata": ..., "rows": [...]} with one object per row; NaN becomes null.
    """
    document = {'metadata': metadata or {}, 'rows': json.loads(frame.to_json(orient='records', double_precision=15))}
    with open(filename, 'w', encoding='utf-8', newline='\n') as file_obj:
        file_obj.write(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + '\n')
    logger.info(f"Wrote {len(frame)} rows to {filename}")


def export_report_json(report, filename):
    with open(filename, 'w', encoding='utf-8', newline='\n') as file_obj:
        file_obj.write(report.to_json())
    logger.info(f"Wrote session report to {filename}")


def export_keys(keys, filename, metadata=None):
    """
    Writes one key per line as bare lowercase hex, most significant bit first,
    after metadata comment lines. Bit lengths go to the `key_bits` metadata line
    since the last hex digit may be zero-padded.

    :param keys: An iterable of KeyBuffer.
    """
    keys = list(keys)
    metadata = dict(metadata or {})
    metadata['key_bits'] = [len(key) for key in keys]
    with open(filename, 'w', encoding='utf-8', newline='\n') as file_obj:
        for line in _metadata_lines(metadata):
            file_obj.write(line + '\n')
        for key in keys:
            file_obj.write(f"{key.to_hex()}\n")
    logger.info(f"Wrote {len(keys)} keys to {filename}")


def read_keys(filename):
    """
    Reads a key file back into KeyBuffers. Without a `key_bits` line every hex
    digit counts as four bits.
    """
    lengths = None
    lines = []
    with open(filename, 'r', encoding='utf-8') as file_obj:
        for line in file_obj:
            line = line.strip()
            if line.startswith(f"{METADATA_PREFIX}key_bits = "):
                lengths = json.loads(line.partition(' = ')[2])
            elif line and not line.startswith('#'):
                lines.append(line)
    if lengths is None:
        lengths = [4 * len(hex_digits) for hex_digits in lines]
    if len(lengths) != len(lines):
        raise DistillError(f"{filename}: key_bits lists {len(lengths)} keys, file holds {len(lines)}")

    keys = []
    for hex_digits, length in zip(lines, lengths):
        bits = bin(int(hex_digits, 16))[2:].zfill(len(hex_digits) * 4)[:length] if hex_digits else ''
        keys.append(KeyBuffer.from_string(bits, KeyStage.SECRET))
    return keys
