#!/usr/bin/env python3
"""Regenerates the sample benign and background Procmon-style CSVs under data/.

Deterministic: the same seed always produces the same files.
"""
import argparse
import csv
import datetime as dt
import random
from pathlib import Path

HEADER = ["Time", "Process Name", "PID", "Operation", "Path", "Result", "Detail"]

SYSTEM_PROCS = [
    ("svchost.exe", 1204), ("svchost.exe", 1388), ("svchost.exe", 2216), ("MsMpEng.exe", 3012),
    ("SearchIndexer.exe", 5120), ("lsass.exe", 712), ("services.exe", 640), ("OneDrive.exe", 6604),
    ("RuntimeBroker.exe", 7020), ("explorer.exe", 4388), ("dwm.exe", 1100), ("spoolsv.exe", 2480),
]
FILES = [
    r"C:\Windows\System32\kernel32.dll", r"C:\Windows\System32\ntdll.dll", r"C:\Windows\System32\user32.dll",
    r"C:\Windows\System32\config\SOFTWARE", r"C:\ProgramData\Microsoft\Windows Defender\Scans\mpcache.bin",
    r"C:\Users\alice\AppData\Local\Microsoft\OneDrive\logs\SyncEngine.odl", r"C:\Windows\Prefetch\SVCHOST.EXE-1A2B3C4D.pf",
    r"C:\Windows\System32\winevt\Logs\System.evtx", r"C:\Users\alice\NTUSER.DAT", r"C:\Windows\WinSxS\pending.xml",
    r"C:\ProgramData\Microsoft\Search\Data\Applications\Windows\Windows.edb", r"C:\Windows\System32\drivers\etc\hosts",
]
KEYS = [
    r"HKLM\SYSTEM\CurrentControlSet\Control\Session Manager", r"HKLM\SOFTWARE\Microsoft\Windows\CurrentVersion\Explorer",
    r"HKCU\Software\Microsoft\Windows\CurrentVersion\Explorer\Advanced", r"HKLM\SYSTEM\CurrentControlSet\Services\Tcpip\Parameters",
    r"HKLM\SOFTWARE\Microsoft\Windows Defender\Real-Time Protection", r"HKCU\Software\Microsoft\OneDrive\Accounts",
    r"HKLM\SOFTWARE\Policies\Microsoft\Windows\WindowsUpdate", r"HKCU\Control Panel\Desktop\WallPaper",
]
HOSTS = ["40.126.32.74:443", "13.107.42.14:443", "52.114.128.43:443", "20.190.151.7:443", "192.168.1.1:53"]
FILE_OPS = ["ReadFile", "QueryOpen", "CreateFile", "CloseFile", "QueryBasicInformationFile", "QueryStandardInformationFile",
            "WriteFile", "CreateFileMapping", "QueryDirectory"]
REG_OPS = ["RegOpenKey", "RegQueryValue", "RegCloseKey", "RegQueryKey", "RegEnumValue"]
NET_OPS = ["TCP Send", "TCP Receive"]


def stamp(t_us):
    t = dt.datetime(2023, 11, 6, 10, 0, 0, tzinfo=dt.timezone.utc) + dt.timedelta(microseconds=t_us)
    return t.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def detail_for(op, rng):
    if op in ("ReadFile", "WriteFile"):
        return f"Offset: {rng.randrange(0, 1 << 20)}, Length: {rng.choice([512, 4096, 16384, 65536])}"
    if op == "CreateFile":
        return "Desired Access: Generic Read, Disposition: Open, ShareMode: Read, Write"
    if op.startswith("Reg"):
        return rng.choice(["Desired Access: Read", "Type: REG_DWORD, Length: 4", "Type: REG_SZ, Length: 22", ""])
    if op.startswith("TCP"):
        return f"Length: {rng.randrange(40, 1461)}, seqnum: 0, connid: 0"
    return ""


def event(rng, procs):
    name, pid = rng.choice(procs)
    roll = rng.random()
    if roll < 0.55:
        op = rng.choice(FILE_OPS)
        path = rng.choice(FILES)
    elif roll < 0.85:
        op = rng.choice(REG_OPS)
        path = rng.choice(KEYS)
    elif roll < 0.95:
        op = rng.choice(NET_OPS)
        path = rng.choice(HOSTS)
    else:
        op = rng.choice(["Thread Create", "Thread Exit", "Load Image"])
        path = rng.choice(FILES[:3]) if op == "Load Image" else ""
    result = "SUCCESS" if rng.random() < 0.9 else rng.choice(["NAME NOT FOUND", "BUFFER OVERFLOW", "END OF FILE"])
    return [name, pid, op, path, result, detail_for(op, rng)]


def write(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(HEADER)
        for t, r in rows:
            w.writerow([stamp(t)] + [str(x) for x in r])


def session(rng, n, span_us, procs, spawns, child_events=0):
    """n ambient events over span_us plus ProcessCreate/Start/Exit for `spawns`."""
    times = sorted(rng.randrange(0, span_us) for _ in range(n))
    rows = [(t, event(rng, procs)) for t in times]
    for parent, child, child_pid, cmd, at in spawns:
        t = int(at * span_us)
        rows.append((t, [parent[0], parent[1], "ProcessCreate", child, "SUCCESS",
                         f"PID: {child_pid}, Command line: {cmd}"]))
        rows.append((t + 150, [child, child_pid, "Process Start", "", "SUCCESS", f"Parent PID: {parent[1]}"]))
        rows.append((t + 900, [child, child_pid, "Load Image", FILES[1], "SUCCESS", "Image Size: 0x1f8000"]))
        start = t + 1000
        for _ in range(child_events):
            rows.append((rng.randrange(start, span_us), event(rng, [(child, child_pid)])))
    rows.sort(key=lambda r: r[0])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20231106)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()
    rng = random.Random(args.seed)

    write(args.out / "background" / "ambient.csv", session(rng, 10000, 10_000_000, SYSTEM_PROCS, []))

    explorer = ("explorer.exe", 4388)
    write(args.out / "benign" / "office.csv", session(
        rng, 2500, 60_000_000, SYSTEM_PROCS[:4] + [("OUTLOOK.EXE", 8440)],
        [(explorer, "WINWORD.EXE", 8120, '"C:\\Program Files\\Microsoft Office\\root\\Office16\\WINWORD.EXE" /n', 0.01),
         (("WINWORD.EXE", 8120), "splwow64.exe", 9012, "splwow64.exe 8192", 0.5)], 600))
    write(args.out / "benign" / "browsing.csv", session(
        rng, 3000, 120_000_000, [("svchost.exe", 1388), ("SearchIndexer.exe", 5120)],
        [(explorer, "firefox.exe", 5540, '"C:\\Program Files\\Mozilla Firefox\\firefox.exe"', 0.0),
         (("firefox.exe", 5540), "firefox.exe", 5612, "firefox.exe -contentproc -childID 1", 0.02)], 900))
    write(args.out / "benign" / "update.csv", session(
        rng, 1500, 30_000_000, [("svchost.exe", 2216), ("MsMpEng.exe", 3012)],
        [(("services.exe", 640), "TrustedInstaller.exe", 7700, "C:\\Windows\\servicing\\TrustedInstaller.exe", 0.0),
         (("TrustedInstaller.exe", 7700), "TiWorker.exe", 7788, "C:\\Windows\\WinSxS\\TiWorker.exe -Embedding", 0.01)], 500))


if __name__ == "__main__":
    main()
