from jinja2 import Environment as JinjaEnvironment
from jinja2 import PackageLoader, StrictUndefined, select_autoescape


def _fmt(value: float, digits: int = 4) -> str:
    return f"{value:.{digits}f}"


report_env = JinjaEnvironment(
    loader=PackageLoader("uosdetect", "templates"),
    autoescape=select_autoescape(default_for_string=False),
    trim_blocks=True,
    lstrip_blocks=True,
    undefined=StrictUndefined,
)

report_env.filters["fmt"] = _fmt
report_env.globals.update({"zip": zip, "enumerate": enumerate})
