from rabi_qst.cli import app


if __name__ == "__main__":
    app()
