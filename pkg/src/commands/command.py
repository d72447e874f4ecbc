import logging
import sys
from abc import ABC, abstractmethod

from pydantic import ValidationError

from ..exceptions.fusion_exceptions import BoxFusionError

logger = logging.getLogger(__name__)


class Command(ABC):
    """命令基类，定义命令接口"""

    name = "command"

    def execute(self) -> bool:
        """
        执行命令

        Returns:
            bool: 执行成功返回True，失败返回False

        Note:
            输入无效、文件错误时在标准错误输出一行诊断信息并返回 False
        """
        try:
            self.run()
            return True
        except (BoxFusionError, ValidationError, OSError, ValueError) as e:
            message = " ".join(str(e).split())
            logger.debug("%s 失败", self.name, exc_info=True)
            print(f"错误：{message}", file=sys.stderr)
            return False

    @abstractmethod
    def run(self) -> None:
        """命令主体，出错时抛出异常"""
        raise NotImplementedError
