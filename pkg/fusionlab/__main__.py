import sys

from fusionlab.runs.cli import dispatch

if __name__ == '__main__':
    sys.exit(dispatch(sys.argv[1:], prog='python -m fusionlab'))
