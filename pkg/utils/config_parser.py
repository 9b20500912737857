import configparser
import json
import os
import typing
from typing import Any, Dict

from pydantic import BaseModel, ValidationError

from utils.data_structures import ExperimentConfig


class ConfigError(ValueError):
    """Malformed experiment file: unknown section or key, bad value, schema violation."""


class ExperimentConfigParser:
    """Parser for key=value experiment files with [kernel], [profile], [shape], ... sections."""

    SECTIONS = tuple(ExperimentConfig.model_fields)

    def parse_file(self, path: str) -> ExperimentConfig:
        """
        Read and validate an experiment file.

        Args:
            path: Path to the .cfg file

        Returns:
            Validated ExperimentConfig
        """
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            return self.parse_text(handle.read(), source=path)

    def parse_text(self, text: str, source: str = "<string>") -> ExperimentConfig:
        """Parse experiment-file text; every key absent from the text keeps its default."""
        raw = self._read_sections(text, source)
        data: Dict[str, Dict[str, Any]] = {}
        for section, items in raw.items():
            model = ExperimentConfig.model_fields[section].annotation
            data[section] = {key: self._coerce(value, self._expects_list(model, key))
                             for key, value in items.items()}
        try:
            return ExperimentConfig(**data)
        except ValidationError as e:
            raise ConfigError(f"Invalid experiment config in {source}:\n{e}") from e

    def _read_sections(self, text: str, source: str) -> Dict[str, Dict[str, str]]:
        """Split into sections, rejecting unknown sections and keys."""
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text, source=source)
        except configparser.Error as e:
            raise ConfigError(f"Cannot parse {source}: {e}") from e

        if parser.defaults():
            raise ConfigError(f"{source}: keys outside a section are not allowed")

        sections = {}
        for section in parser.sections():
            if section not in self.SECTIONS:
                raise ConfigError(f"{source}: unknown section [{section}]; expected one of {', '.join(self.SECTIONS)}")
            model = ExperimentConfig.model_fields[section].annotation
            for key in parser[section]:
                if key not in model.model_fields:
                    raise ConfigError(
                        f"{source}: unknown key '{key}' in [{section}]; "
                        f"expected one of {', '.join(model.model_fields)}"
                    )
            sections[section] = dict(parser[section])
        return sections

    def _coerce(self, value: str, as_list: bool) -> Any:
        """JSON literal, else comma-separated numbers, else the bare string."""
        text = value.strip()
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError:
            parsed = self._split_numbers(text)
        if as_list and isinstance(parsed, (int, float)) and not isinstance(parsed, bool):
            return [parsed]
        return parsed

    def _split_numbers(self, text: str) -> Any:
        if "," in text:
            try:
                return [float(part) for part in text.split(",") if part.strip()]
            except ValueError:
                raise ConfigError(f"Malformed list value: '{text}'")
        return text

    def _expects_list(self, model: typing.Type[BaseModel], key: str) -> bool:
        annotation = model.model_fields[key].annotation
        candidates = typing.get_args(annotation) if typing.get_origin(annotation) is typing.Union else (annotation,)
        return any(typing.get_origin(c) is list for c in candidates)
