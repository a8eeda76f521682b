from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.platypus import SimpleDocTemplate, Table, TableStyle, Paragraph, Spacer
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.units import inch
from reportlab.lib.enums import TA_CENTER, TA_JUSTIFY
from datetime import datetime
from pathlib import Path
from xml.sax.saxutils import escape

from reports.table_writer import TITLES, UNAVAILABLE, display_name
from services.experiment_runner import METRICS, ReportBundle


class PDFGenerator:
    def __init__(self):
        self.styles = getSampleStyleSheet()
        self._create_custom_styles()

    def _create_custom_styles(self):
        """Report styles"""
        self.styles.add(ParagraphStyle(
            name='CustomTitle',
            parent=self.styles['Title'],
            fontSize=22,
            textColor=colors.HexColor('#0a1628'),
            spaceAfter=24,
            alignment=TA_CENTER
        ))

        self.styles.add(ParagraphStyle(
            name='CustomHeading',
            parent=self.styles['Heading1'],
            fontSize=14,
            textColor=colors.HexColor('#0a1628'),
            spaceAfter=10,
            spaceBefore=14,
            leftIndent=0
        ))

        self.styles.add(ParagraphStyle(
            name='CustomBody',
            parent=self.styles['BodyText'],
            fontSize=10,
            textColor=colors.HexColor('#4b5563'),
            alignment=TA_JUSTIFY,
            spaceAfter=6
        ))

    def _metric_table(self, bundle: ReportBundle, metric: str) -> Table:
        frame = bundle.table(metric)
        rows = [['Dataset'] + [display_name(d) for d in frame.columns]]
        for label, values in frame.iterrows():
            rows.append([str(label)] + [UNAVAILABLE if v != v else f"{v:.3f}" for v in values])

        table = Table(rows, colWidths=[1.6*inch] + [1.1*inch] * len(frame.columns))
        table.setStyle(TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#0a1628')),
            ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('ALIGN', (1, 0), (-1, -1), 'RIGHT'),
            ('BACKGROUND', (0, 1), (-1, -2), colors.HexColor('#f9fafb')),
            # Average row
            ('FONTNAME', (0, -1), (-1, -1), 'Helvetica-Bold'),
            ('BACKGROUND', (0, -1), (-1, -1), colors.HexColor('#e5e7eb')),
            ('GRID', (0, 0), (-1, -1), 1, colors.HexColor('#e5e7eb'))
        ]))
        return table

    def generate_report(self, bundle: ReportBundle, output_dir) -> Path:
        """Generate a PDF with one table per metric"""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        filepath = output_dir / f"{bundle.name}_report.pdf"

        doc = SimpleDocTemplate(
            str(filepath),
            pagesize=letter,
            rightMargin=72,
            leftMargin=72,
            topMargin=72,
            bottomMargin=72
        )

        story = []
        story.append(Paragraph(f"Outlier Detection Benchmark: {bundle.name}", self.styles['CustomTitle']))
        settings = (
            f"MinPts {bundle.minpts}, decision rule {bundle.rule}, {bundle.backend} neighbor search, "
            f"{bundle.repetitions} repetitions from seed {bundle.seed}. "
            f"Generated {datetime.now().strftime('%B %d, %Y')}."
        )
        story.append(Paragraph(settings, self.styles['CustomBody']))

        for metric in METRICS:
            story.append(Paragraph(TITLES[metric], self.styles['CustomHeading']))
            story.append(self._metric_table(bundle, metric))
            story.append(Spacer(1, 0.2*inch))

        if bundle.failures:
            story.append(Paragraph("Failed cells", self.styles['CustomHeading']))
            for report in bundle.failures:
                story.append(Paragraph(f"• {report.dataset} / {display_name(report.detector)}: {escape(report.error)}",
                                       self.styles['CustomBody']))

        doc.build(story)

        return filepath
