import sys

with open(sys.argv[1], "wb") as out:
    out.write(b"x" * (1 << 12))
