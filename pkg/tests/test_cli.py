"""Command line interface end-to-end behaviour."""

import pytest

from p2psec.cli import main

POLICY_XML = """<policy>
  <domain id="1" name="domainA">
    <property type="confidentiality"/>
  </domain>
  <file id="2" path="/root/secret.txt" domainid="1"/>
</policy>
"""

CONFLICTED_XML = """<policy>
  <domain id="1" name="messy">
    <property type="confidentiality"/>
    <property type="spread"/>
  </domain>
</policy>
"""

SCENARIO = """seed 3
peer a
peer b
peer c
knows a c 0.8
domain a src
property a src cooperation
resource a thing src
domain b dst
ask b a thing dst
"""

CHALLENGE = """scontext=user_u:user_r:user_t vim /root/secret.txt
expect=denied
permissions=read
tcontext=system_u:object_r:domainA_t
"""

GOOD_TRACE = ('audit(1229395253.757:369): avc: denied { read } for '
              'pid=4241 comm="vim" name="secret.txt" dev=sda3 ino=179226 '
              'scontext=user_u:user_r:user_t '
              'tcontext=system_u:object_r:domainA_t tclass=file\n')


@pytest.fixture
def policy_file(tmp_path):
    path = tmp_path / "policy.xml"
    path.write_text(POLICY_XML)
    return str(path)


def test_compile_outputs_rules_and_contexts(policy_file, capsys):
    assert main(["compile", policy_file]) == 0
    out = capsys.readouterr().out
    assert "domainA:" in out
    assert "neverallow file {read append setattr}" in out
    assert "/root/secret.txt system_u:object_r:domainA_t" in out


def test_compile_bad_xml_fails(tmp_path, capsys):
    path = tmp_path / "bad.xml"
    path.write_text("<policy><wat/></policy>")
    assert main(["compile", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_compile_missing_file_fails(tmp_path, capsys):
    assert main(["compile", str(tmp_path / "absent.xml")]) == 1
    assert "error:" in capsys.readouterr().err


def test_check_clean_policy(policy_file, capsys):
    assert main(["check", policy_file]) == 0
    assert "no conflicts" in capsys.readouterr().out


def test_check_reports_conflicts(tmp_path, capsys):
    path = tmp_path / "messy.xml"
    path.write_text(CONFLICTED_XML)
    assert main(["check", str(path)]) == 1
    out = capsys.readouterr().out
    assert "conflict in domain messy" in out
    assert "confidentiality" in out and "spread" in out


def test_simulate_runs_scenario(tmp_path, capsys):
    path = tmp_path / "run.scn"
    path.write_text(SCENARIO)
    assert main(["simulate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "outcome=accepted" in out
    assert "seed=3" in out


def test_simulate_seed_override_and_out_file(tmp_path):
    path = tmp_path / "run.scn"
    path.write_text(SCENARIO)
    out_path = tmp_path / "report.txt"
    assert main(["simulate", str(path), "--seed", "9",
                 "--out", str(out_path)]) == 0
    assert "seed=9" in out_path.read_text()


def test_simulate_bad_scenario_fails(tmp_path, capsys):
    path = tmp_path / "bad.scn"
    path.write_text("ask ghost nobody thing dst\n")
    assert main(["simulate", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_verify_challenge_pass_and_fail(tmp_path, capsys):
    challenge = tmp_path / "challenge.txt"
    challenge.write_text(CHALLENGE)
    trace = tmp_path / "trace.txt"
    trace.write_text(GOOD_TRACE)
    assert main(["verify-challenge", str(challenge), str(trace)]) == 0
    assert capsys.readouterr().out.startswith("pass")

    granted = tmp_path / "granted.txt"
    granted.write_text(GOOD_TRACE.replace("denied", "granted"))
    assert main(["verify-challenge", str(challenge), str(granted)]) == 1
    assert capsys.readouterr().out.startswith("fail")


def test_bench_small_counts(capsys):
    assert main(["bench", "--counts", "5,10,15", "--repeats", "1"]) == 0
    out = capsys.readouterr().out
    assert "domains=5" in out
    assert "fit_slope_ms=" in out


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 2
