"""Validates config files against the published experiment schema."""

import json
import sys

import jsonschema


def main(argv):
    with open(argv[1]) as f:
        schema = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)
    failed = 0
    for path in argv[2:]:
        with open(path) as f:
            errors = list(validator.iter_errors(json.load(f)))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}")
        failed += bool(errors)
    print(f"{len(argv) - 2 - failed}/{len(argv) - 2} configs valid")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
