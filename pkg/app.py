"""
控制資訊散播模型 - 命令列入口

dissemination analyze|tune|simulate|figures --config config/experiments/xxx.yaml
"""

from src.cli.app import app


def main():
    """主程式入口"""
    app()


if __name__ == "__main__":
    main()
