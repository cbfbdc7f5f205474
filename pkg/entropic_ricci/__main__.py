from entropic_ricci.cli import main

if __name__ == "__main__":
    main()
