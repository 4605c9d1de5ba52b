import socket
import sys

try:
    s = socket.create_connection(("1.1.1.1", 80), timeout=2)
    s.close()
    verdict = b"net-open"
except OSError:
    verdict = b"net-denied"
with open(sys.argv[1], "wb") as out:
    out.write(verdict)
