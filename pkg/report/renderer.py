"""HTML and Markdown renderings of an experiment report."""
from __future__ import annotations

import html
from dataclasses import dataclass
from functools import cached_property

from report.context import CheckRecord, ExperimentReport


@dataclass
class ReportTheme:
    """Colors of the report page; ``failure`` and ``success`` tint the verdict and failing checks."""

    background: str = "#f7f8fa"
    text: str = "#1f1f1f"
    panel: str = "#ffffff"
    accent: str = "#2a82da"
    border: str = "#dbe1ea"
    failure: str = "#d9534f"
    success: str = "#2e7d32"


def _format_value(value) -> str:
    """Format scalars compactly; nested values are summarised."""

    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        if len(value) <= 4 and all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(_format_value(v) for v in value) + "]"
        return f"[{len(value)} items]"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_format_value(v)}" for k, v in value.items())
    return str(value)


def _status(passed) -> str:
    if passed is None:
        return "info"
    return "pass" if passed else "FAIL"


class ReportRenderer:
    """Render an ExperimentReport as a standalone HTML page or as Markdown."""

    def __init__(self, theme: ReportTheme | None = None) -> None:
        self.theme = theme or ReportTheme()

    @cached_property
    def _markdown(self):
        from markdown_it import MarkdownIt

        return MarkdownIt("commonmark", {"html": False})

    @staticmethod
    def _sanitize(html_content: str) -> str:
        import bleach

        allowed_tags = set(bleach.sanitizer.ALLOWED_TAGS).union(
            {"p", "pre", "code", "h1", "h2", "h3", "h4", "h5", "h6", "ul", "ol", "li", "strong", "em"}
        )
        allowed_attrs = {
            **bleach.sanitizer.ALLOWED_ATTRIBUTES,
            "a": ["href", "title", "rel"],
            "code": ["class"],
        }
        return bleach.clean(
            html_content,
            tags=allowed_tags,
            attributes=allowed_attrs,
            protocols=["http", "https", "mailto"],
            strip=True,
        )

    def render_notes(self, notes: str) -> str:
        if not notes.strip():
            return ""
        return f"<div class='notes'>{self._sanitize(self._markdown.render(notes))}</div>"

    def render_html(self, report: ExperimentReport) -> str:
        title = html.escape(report.title or "Experiment report")
        verdict = "PASS" if report.overall_pass else "FAIL"
        color = self.theme.success if report.overall_pass else self.theme.failure
        body = [
            f"<h1>{title}</h1>",
            f"<p class='verdict' style='color:{color}'>{verdict}</p>",
            f"<p class='version'>version {html.escape(report.version)}</p>",
            self.render_notes(report.notes),
        ]
        body.extend(self._render_check(record) for record in report.checks)
        body.append(self._render_error_panel(report.errors))
        body.append(self._render_log_panel(report.logs))
        content = "\n".join(part for part in body if part)
        return f"""
        <!DOCTYPE html>
        <html>
        <head>
            <meta charset='utf-8'>
            <title>{title}</title>
            <style>
                {self._stylesheet()}
            </style>
        </head>
        <body>
            <div class='page'>
                {content}
            </div>
        </body>
        </html>
        """

    def _render_check(self, record: CheckRecord) -> str:
        rows = []
        for key, value in record.data.items():
            rows.append(
                "<tr>"
                f"<td>{html.escape(str(key))}</td>"
                f"<td>{html.escape(_format_value(value))}</td>"
                "</tr>"
            )
        status = _status(record.passed)
        return (
            f"<div class='check-table {status.lower()}'>"
            f"<h3>{html.escape(record.stage)} <span class='status'>{status}</span></h3>"
            "<table>"
            "<thead><tr><th>Quantity</th><th>Value</th></tr></thead>"
            "<tbody>"
            + "".join(rows)
            + "</tbody>"
            "</table>"
            "</div>"
        )

    def _render_error_panel(self, errors) -> str:
        """Render accumulated stage errors."""

        if not errors:
            return ""

        items = []
        for error in errors:
            stage = html.escape(error.get("stage", ""))
            message = html.escape(error.get("message", ""))
            error_type = html.escape(error.get("type", "Error"))
            items.append(f"<li><strong>{error_type}</strong> ({stage}): {message}</li>")

        return "<div class='error-panel'><h3>Errors</h3><ul>" + "".join(items) + "</ul></div>"

    def _render_log_panel(self, logs) -> str:
        if not logs:
            return ""

        rows = []
        for entry in logs:
            details = "; ".join(entry.get("details", [])) or "-"
            rows.append(
                "<tr>"
                f"<td>{html.escape(entry.get('stage', ''))}</td>"
                f"<td>{entry.get('duration_ms', 0):.2f} ms</td>"
                f"<td>{html.escape(details)}</td>"
                "</tr>"
            )

        return (
            "<div class='log-panel'>"
            "<h3>Run log</h3>"
            "<table>"
            "<thead><tr><th>Stage</th><th>Time</th><th>Details</th></tr></thead>"
            "<tbody>"
            + "".join(rows)
            + "</tbody>"
            "</table>"
            "</div>"
        )

    def render_markdown(self, report: ExperimentReport) -> str:
        lines = [f"# {report.title or 'Experiment report'}", ""]
        lines.append(f"**Result:** {'PASS' if report.overall_pass else 'FAIL'} (version {report.version})")
        lines.append("")
        if report.notes.strip():
            lines.extend([report.notes.strip(), ""])
        for record in report.checks:
            lines.append(f"## {record.stage} ({_status(record.passed)})")
            lines.append("")
            lines.append("| Quantity | Value |")
            lines.append("| --- | --- |")
            for key, value in record.data.items():
                cell = _format_value(value).replace("|", "\\|")
                lines.append(f"| {key} | {cell} |")
            lines.append("")
        if report.errors:
            lines.append("## Errors")
            lines.append("")
            for error in report.errors:
                lines.append(f"- **{error.get('type', 'Error')}** ({error.get('stage', '')}): {error.get('message', '')}")
            lines.append("")
        if report.logs:
            lines.append("## Run log")
            lines.append("")
            lines.append("| Stage | Time | Details |")
            lines.append("| --- | --- | --- |")
            for entry in report.logs:
                details = "; ".join(entry.get("details", [])) or "-"
                lines.append(f"| {entry.get('stage', '')} | {entry.get('duration_ms', 0):.2f} ms | {details} |")
            lines.append("")
        return "\n".join(lines)

    def _stylesheet(self) -> str:
        """Return CSS for the report page."""

        return f"""
            body {{ margin: 0; padding: 32px 16px; background: {self.theme.border}; color: {self.theme.text}; font-family: "DejaVu Sans", Helvetica, sans-serif; }}
            .page {{ margin: 0 auto; max-width: 960px; padding: 20px 28px; background: {self.theme.background}; border-radius: 4px; }}
            h1 {{ color: {self.theme.accent}; margin-top: 0; }}
            .verdict {{ font-size: 20px; font-weight: bold; }}
            .notes {{ margin-bottom: 16px; line-height: 1.5; }}
            .check-table, .error-panel, .log-panel {{ margin-top: 16px; background: {self.theme.panel}; padding: 12px; border-radius: 6px; border: 1px solid {self.theme.border}; }}
            .check-table.fail {{ border-color: {self.theme.failure}; }}
            .check-table h3, .log-panel h3 {{ margin-top: 0; }}
            .error-panel h3 {{ margin-top: 0; color: {self.theme.failure}; }}
            .status {{ font-size: 12px; opacity: 0.8; }}
            table {{ width: 100%; border-collapse: collapse; }}
            th, td {{ padding: 6px 8px; text-align: left; border-bottom: 1px solid {self.theme.border}; }}
            th {{ opacity: 0.8; }}
        """
