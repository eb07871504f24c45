"""Self-hostable classroom experiment: rule-based vs discretionary trading
over historical cryptocurrency prices, with a control-orientation test, a
closing questionnaire, and offline study runners."""

__version__ = "0.1.0"
