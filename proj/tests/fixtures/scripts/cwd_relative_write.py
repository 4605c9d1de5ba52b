import os
import sys

with open("leak.txt", "w") as f:
    f.write(os.getcwd())
with open(sys.argv[1], "wb") as out:
    out.write(b"ok")
