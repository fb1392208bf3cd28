"""异常定义模块.

所有模块共享的错误类型，CLI 根据错误类型映射退出码.
"""

from typing import Optional


class ToolkitError(Exception):
    """工具包错误基类."""

    pass


class ValidationError(ToolkitError, ValueError):
    """参数或前置条件校验失败."""

    pass


class SingularityError(ToolkitError):
    """核函数在单位元处求值（奇点）或原子重合."""

    pass


class BudgetExceededError(ToolkitError):
    """顶点、原子或三元组数量超出预算."""

    pass


class ConvergenceError(ToolkitError):
    """迭代在最大次数内未收敛.

    Attributes:
        last_estimate: 最后一次迭代的估计值.
        iterations: 已执行的迭代次数.
    """

    def __init__(
        self,
        message: str,
        last_estimate: Optional[float] = None,
        iterations: int = 0,
    ):
        """初始化收敛错误.

        Args:
            message: 错误信息.
            last_estimate: 最后一次迭代的估计值.
            iterations: 已执行的迭代次数.
        """
        super().__init__(message)
        self.last_estimate = last_estimate
        self.iterations = iterations
