from cpamm.cli import main

main()
