from rectroom.cli import main

main()
