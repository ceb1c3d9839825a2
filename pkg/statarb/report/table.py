import math
import numbers
from typing import Any, List, Optional


def format_cell(value: Any) -> str:
    if value is None:
        return '-'
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if isinstance(value, float):
        return 'nan' if math.isnan(value) else f'{value:.4g}'
    return str(value).strip()


def is_numeric(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


class TableCreator:
    """Plain-text table for terminal output; numeric columns are right aligned."""
    separator = '|'
    horizontal_separator = '+'

    def __init__(self, headings: Optional[List[str]], rows: List[List[Any]]) -> None:
        self.headings = list(headings or [])
        width = max([len(self.headings)] + [len(row) for row in rows])
        self.right = [self._numeric_column([row[idx] for row in rows if idx < len(row)]) for idx in range(width)]
        self.rows = [[format_cell(cell) for cell in row] + [''] * (width - len(row)) for row in rows]
        self.widths = [len(heading) for heading in self.headings] + [0] * (width - len(self.headings))
        for row in self.rows:
            self.widths = [max(size, len(cell)) for size, cell in zip(self.widths, row)]

    @staticmethod
    def _numeric_column(cells: List[Any]) -> bool:
        present = [cell for cell in cells if cell is not None]
        return len(present) > 0 and all(is_numeric(cell) for cell in present)

    def _cell(self, value: str, idx: int) -> str:
        padded = value.rjust(self.widths[idx]) if self.right[idx] else value.ljust(self.widths[idx])
        return f' {padded} '

    def _line(self, cells: List[str]) -> str:
        return f'{self.separator}{self.separator.join(cells)}{self.separator}'

    def _row(self, values: List[str]) -> str:
        values = values + [''] * (len(self.widths) - len(values))
        return self._line([self._cell(value, idx) for idx, value in enumerate(values)])

    def create(self) -> List[str]:
        lines = []
        if self.headings:
            lines.append(self._row(self.headings))
            rule = self.horizontal_separator.join('-' * (size + 2) for size in self.widths)
            lines.append(f'{self.separator}{rule}{self.separator}')
        lines.extend(self._row(row) for row in self.rows)
        return lines

    def render(self) -> str:
        return '\n'.join(self.create())
