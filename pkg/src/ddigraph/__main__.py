from ddigraph.cli import main

main()
