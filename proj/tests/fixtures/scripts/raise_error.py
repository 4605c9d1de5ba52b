import sys

def main():
    return 1 // 0

if __name__ == "__main__":
    main()
