from config import Config
from kinkstats.cli import create_cli

cli = create_cli(Config)

if __name__ == '__main__':
    cli()
