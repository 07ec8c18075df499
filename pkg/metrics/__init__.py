from metrics.monitor_stream import MonitorStream, read_monitor_csv

__all__ = ['MonitorStream', 'read_monitor_csv']
