"""Strip the small LaTeX vocabulary used in the golden prompt boxes down to plain text."""
import re

_SPACING = re.compile(r"\\(smallskip|medskip|bigskip|small)\b")
_WRAPPERS = re.compile(r"\\(textbf|texttt|textit|underline)\{((?:[^{}]|\\\{|\\\})*)\}")


def latex_to_text(src: str) -> str:
    text = _SPACING.sub("", src)
    # \{\texttt{Name}\} placeholders must survive the wrapper pass
    text = text.replace("\\{", "\x01").replace("\\}", "\x02")
    prev = None
    while prev != text:
        prev = text
        text = _WRAPPERS.sub(lambda m: m.group(2), text)
    text = text.replace("\x01", "{").replace("\x02", "}")
    text = text.replace("``", '"').replace("''", '"')
    text = text.replace("\\_", "_").replace("\\&", "&")
    text = re.sub(r"~+", " ", text)
    return text


def tokens(text: str) -> list[str]:
    return text.split()
