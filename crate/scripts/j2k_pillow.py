#!/usr/bin/env python3
"""JPEG2000 encode/decode through Pillow (OpenJPEG) for the external-codec adapter.

    HOLO_EXT_ENCODE='python3 scripts/j2k_pillow.py encode {in} {out} {ratio}'
    HOLO_EXT_DECODE='python3 scripts/j2k_pillow.py decode {in} {out}'
"""
import sys

from PIL import Image


def main(argv):
    if len(argv) >= 4 and argv[1] == "encode":
        ratio = float(argv[4]) if len(argv) > 4 else 50.0
        img = Image.open(argv[2]).convert("L")
        img.save(argv[3], format="JPEG2000", quality_mode="rates",
                 quality_layers=[ratio], irreversible=True)
    elif len(argv) >= 4 and argv[1] == "decode":
        Image.open(argv[2]).convert("L").save(argv[3], format="PPM")
    else:
        sys.stderr.write(__doc__)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
