import _accept


def pytest_terminal_summary(terminalreporter):
    if _accept.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _accept.LINES:
            terminalreporter.write_line(line)
