class BoxFusionError(Exception):
    """盒融合引擎基础异常类"""
    pass

class InvalidGeometryError(BoxFusionError):
    """几何参数无效异常（尺寸非正、四元数非单位、内参越界等）"""
    pass

class StreamFormatError(BoxFusionError):
    """检测流或结果文件格式错误"""
    pass

class SchemaVersionError(StreamFormatError):
    """文件格式版本不匹配"""
    pass

class FrameOrderError(BoxFusionError):
    """帧编号非单调递增"""
    pass

class DimensionMismatchError(BoxFusionError):
    """语义特征维度不一致"""
    pass

class PlacementError(BoxFusionError):
    """仿真场景在重试上限内无法放置物体"""
    pass

class ConfigError(BoxFusionError):
    """配置组合无效"""
    pass
