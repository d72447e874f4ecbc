"""配置分层：默认值 < --config 文件 < BOXFUSION_* 环境变量 < 命令行参数"""
import argparse
import json
import logging
import os
import typing
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from .settings import SECTIONS, RunConfig
from ..exceptions.fusion_exceptions import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "BOXFUSION_"
_DEST_PREFIX = "cfg__"


def _build_field_index() -> Dict[str, Tuple[Optional[str], Any]]:
    """字段名 -> (分组名, 字段信息)，顶层字段的分组为 None"""
    index: Dict[str, Tuple[Optional[str], Any]] = {}
    for name, info in RunConfig.model_fields.items():
        if name not in SECTIONS:
            index[name] = (None, info)
    for section in SECTIONS:
        model = RunConfig.model_fields[section].annotation
        for name, info in model.model_fields.items():
            if name in index:
                raise ConfigError(f"配置字段 {name} 重复定义")
            index[name] = (section, info)
    return index


FIELD_INDEX = _build_field_index()


def _is_sequence(info) -> bool:
    origin = typing.get_origin(info.annotation)
    return origin in (list, tuple)


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """
    为解析器添加与配置字段一一对应的参数

    Args:
        parser: 子命令解析器

    Note:
        参数名为字段名的 kebab-case 形式，例如 tau_3d -> --tau-3d
    """
    parser.add_argument("--config", type=Path, help="RunConfig JSON 文件")
    parser.add_argument("--print-config", action="store_true", help="打印有效配置并退出")
    group = parser.add_argument_group("配置参数")
    for name, (section, info) in FIELD_INDEX.items():
        flag = "--" + name.replace("_", "-")
        kwargs = {"dest": _DEST_PREFIX + name, "default": argparse.SUPPRESS,
                  "help": f"{info.description or ''} (默认 {info.get_default(call_default_factory=True)})"}
        if _is_sequence(info):
            kwargs["nargs"] = "+"
        group.add_argument(flag, **kwargs)


def overrides_from_args(namespace: argparse.Namespace) -> Dict[str, Any]:
    """提取命令行中显式给出的配置字段"""
    return {key[len(_DEST_PREFIX):]: value for key, value in vars(namespace).items()
            if key.startswith(_DEST_PREFIX)}


def _apply(data: Dict[str, Any], name: str, value: Any) -> None:
    section = FIELD_INDEX[name][0]
    if section is None:
        data[name] = value
    else:
        data.setdefault(section, {})[name] = value


def load_config(config_path: Optional[Path] = None, environ: Optional[Mapping[str, str]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    按层合并得到有效配置

    Args:
        config_path: 可选的 RunConfig JSON 文件
        environ: 环境变量映射，默认 os.environ
        overrides: 命令行覆盖值，键为字段名

    Returns:
        RunConfig: 校验后的有效配置

    Raises:
        ConfigError: 未知字段
        pydantic.ValidationError: 取值非法
    """
    data: Dict[str, Any] = RunConfig().model_dump()
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        for key, value in loaded.items():
            if key in SECTIONS and isinstance(value, dict):
                data[key].update(value)
            else:
                data[key] = value

    environ = os.environ if environ is None else environ
    for name, (_, info) in FIELD_INDEX.items():
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            continue
        value = [part.strip() for part in raw.split(",")] if _is_sequence(info) else raw
        logger.debug("环境变量覆盖 %s=%s", name, raw)
        _apply(data, name, value)

    for name, value in (overrides or {}).items():
        if name not in FIELD_INDEX:
            raise ConfigError(f"未知配置字段：{name}")
        _apply(data, name, value)
    return RunConfig.model_validate(data)


def dump_config(config: RunConfig) -> str:
    """有效配置的 JSON 文本，可直接作为 --config 输入"""
    return config.model_dump_json(indent=2)
