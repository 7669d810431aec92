"""
Report generation module.
Generates HTML and JSON reports for verification and audit runs.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from jinja2 import Template

from .utils import ensure_directory, get_iso_timestamp, get_timestamp


# HTML Report Template
HTML_TEMPLATE = """
<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>{{ title }} - {{ timestamp }}</title>
    <style>
        * {
            margin: 0;
            padding: 0;
            box-sizing: border-box;
        }

        body {
            font-family: -apple-system, BlinkMacSystemFont, 'Segoe UI', Roboto, Oxygen, Ubuntu, Cantarell, sans-serif;
            background: #f5f7fa;
            color: #2c3e50;
            padding: 20px;
            line-height: 1.6;
        }

        .container {
            max-width: 1200px;
            margin: 0 auto;
            background: white;
            border-radius: 12px;
            box-shadow: 0 2px 10px rgba(0,0,0,0.1);
            overflow: hidden;
        }

        .header {
            background: linear-gradient(135deg, #1f6f8b 0%, #243b55 100%);
            color: white;
            padding: 40px 30px;
        }

        .header h1 {
            font-size: 32px;
            margin-bottom: 10px;
        }

        .summary {
            display: grid;
            grid-template-columns: repeat(auto-fit, minmax(200px, 1fr));
            gap: 20px;
            padding: 30px;
            background: #f8f9fa;
        }

        .stat-card {
            background: white;
            padding: 20px;
            border-radius: 8px;
            box-shadow: 0 1px 3px rgba(0,0,0,0.1);
        }

        .stat-card .label {
            font-size: 13px;
            color: #7f8c8d;
            text-transform: uppercase;
        }

        .stat-card .value {
            font-size: 24px;
            font-weight: bold;
        }

        .results {
            padding: 30px;
        }

        table {
            width: 100%;
            border-collapse: collapse;
            font-family: 'SFMono-Regular', Consolas, monospace;
            font-size: 13px;
        }

        th, td {
            text-align: left;
            padding: 8px 10px;
            border-bottom: 1px solid #ecf0f1;
        }

        th {
            background: #ecf0f1;
        }

        .pass { color: #27ae60; font-weight: bold; }
        .fail { color: #c0392b; font-weight: bold; }

        .footer {
            padding: 20px 30px;
            color: #95a5a6;
            font-size: 13px;
            text-align: center;
        }
    </style>
</head>
<body>
    <div class="container">
        <div class="header">
            <h1>{{ title }}</h1>
            <p>Generated {{ timestamp }}{% if codes %} &middot; codes: {{ codes | join(", ") }}{% endif %}</p>
        </div>

        <div class="summary">
            {% for key, value in summary.items() %}
            <div class="stat-card">
                <div class="label">{{ key | replace("_", " ") }}</div>
                <div class="value">{{ value }}</div>
            </div>
            {% endfor %}
        </div>

        <div class="results">
            <h2>Results</h2>
            {% if results %}
            <table>
                <tr>
                    {% for column in columns %}<th>{{ column }}</th>{% endfor %}
                </tr>
                {% for row in results %}
                <tr>
                    {% for column in columns %}
                    {% set cell = row.get(column) %}
                    {% if cell is sameas true %}<td class="pass">PASS</td>
                    {% elif cell is sameas false %}<td class="fail">FAIL</td>
                    {% else %}<td>{{ cell if cell is not none else "" }}</td>{% endif %}
                    {% endfor %}
                </tr>
                {% endfor %}
            </table>
            {% else %}
            <p>No results.</p>
            {% endif %}
        </div>

        <div class="footer">
            <p>Generated by gadqec</p>
        </div>
    </div>
</body>
</html>
"""

TITLES = {
    "verify": "Coefficient Verification Report",
    "audit": "Correctable Set Audit Report",
}


class ReportGenerator:
    """Generates HTML and JSON reports for verification and audit runs."""

    def __init__(self, output_dir: str = "reports", logger: Optional[logging.Logger] = None):
        """
        Initialize report generator.

        Args:
            output_dir: Directory to save reports
            logger: Optional logger
        """
        self.output_dir = ensure_directory(output_dir)
        self.logger = logger or logging.getLogger(__name__)

    def generate(
        self,
        kind: str,
        summary: Dict[str, Any],
        results: List[Dict[str, Any]],
        codes: Sequence[str] = (),
        format: str = "both"  # "html", "json", or "both"
    ) -> Dict[str, str]:
        """
        Generate a report.

        Args:
            kind: Run kind ("verify" or "audit"), used in the file name
            summary: Flat summary values shown as cards
            results: One dictionary per table row
            codes: Codes covered by the run
            format: Report format ("html", "json", or "both")

        Returns:
            Dictionary with paths to generated reports
        """
        if format not in ("html", "json", "both"):
            raise ValueError(f"Unknown report format: {format}")
        timestamp = get_timestamp()
        generated_files = {}

        if format in ["html", "both"]:
            html_path = self._generate_html(kind, summary, results, codes, timestamp)
            generated_files["html"] = str(html_path)

        if format in ["json", "both"]:
            json_path = self._generate_json(kind, summary, results, codes, timestamp)
            generated_files["json"] = str(json_path)

        self.logger.info(f"{kind} report written: {generated_files}")
        return generated_files

    def _generate_html(
        self,
        kind: str,
        summary: Dict[str, Any],
        results: List[Dict[str, Any]],
        codes: Sequence[str],
        timestamp: str
    ) -> Path:
        """Generate HTML report."""
        columns: List[str] = []
        for row in results:
            columns += [k for k in row if k not in columns]

        cards = {k: v for k, v in summary.items() if isinstance(v, (str, int, float, bool))}
        template = Template(HTML_TEMPLATE)
        html_content = template.render(
            title=TITLES.get(kind, f"{kind.title()} Report"),
            timestamp=get_iso_timestamp(),
            codes=list(codes),
            summary=cards,
            results=results,
            columns=columns,
        )

        file_path = self.output_dir / f"{kind}_report_{timestamp}.html"
        file_path.write_text(html_content, encoding="utf-8")
        return file_path

    def _generate_json(
        self,
        kind: str,
        summary: Dict[str, Any],
        results: List[Dict[str, Any]],
        codes: Sequence[str],
        timestamp: str
    ) -> Path:
        """Generate JSON report."""
        report = {
            "metadata": {
                "generated_at": get_iso_timestamp(),
                "kind": kind,
                "codes": list(codes),
                "report_version": "1.0"
            },
            "summary": summary,
            "results": results
        }

        file_path = self.output_dir / f"{kind}_report_{timestamp}.json"
        file_path.write_text(json.dumps(report, indent=2, default=str), encoding="utf-8")
        return file_path
