"""Rule projection, labels, audit records, and challenges."""

import pytest

from p2psec import (
    AvcParseError,
    AvcRecord,
    ChallengeError,
    Decision,
    DEFAULT_RULESET,
    DIR_PERMISSIONS,
    FILE_PERMISSIONS,
    KIND_NEVERALLOW,
    PeerPolicy,
    Permission,
    PermissionClass,
    PropertyKind,
    SecurityContext,
    UnknownPermissionError,
    UnknownResourceError,
    check_access,
    compile_policy,
    confidentiality,
    cooperation,
    emit_rules,
    integrity,
    kind_ruleset,
    make_challenge,
    noshare,
    object_context,
    parse_avc,
    parse_challenge,
    parse_rules,
    render_avc,
    render_challenge,
    render_contexts,
    sanitize_label,
    verify_challenge,
)

# Permission vocabulary and the per-kind forbidden sets, hand-copied
# (with token normalization) from the reference rule tables.
FILE_VOCAB = ("read", "write", "unlink", "create", "append", "mounton",
              "rename", "lock", "execute", "getattr", "setattr")
DIR_VOCAB = ("read", "write", "unlink", "search", "create", "mounton",
             "getattr", "setattr", "rename", "add_name", "remove_name",
             "reparent", "rmdir")

NEVERALLOW = {
    "confidentiality": ({"read", "append", "setattr"},
                        {"read", "search", "setattr"}),
    "integrity": ({"write", "unlink", "append", "rename", "setattr"},
                  {"write", "unlink", "setattr", "rename", "remove_name",
                   "rmdir"}),
    "nopublication": ({"create", "setattr", "mounton"},
                      {"create", "setattr", "add_name", "remove_name",
                       "rmdir", "mounton"}),
    "noshare": ({"create", "setattr", "mounton"},
                {"create", "setattr", "add_name", "remove_name", "rmdir",
                 "mounton"}),
    "cooperation": (set(), set()),
    "spread": (set(), set()),
}

AVC_LINE = ('audit(1229395253.757:369): avc: denied { read } for pid=4241 '
            'comm="vim" name="secret.txt" dev=sda3 ino=179226 '
            'scontext=user_u:user_r:user_t '
            'tcontext=system_u:object_r:domainA_t tclass=file')


def test_permission_vocabularies():
    assert FILE_PERMISSIONS == FILE_VOCAB
    assert DIR_PERMISSIONS == DIR_VOCAB
    assert len(FILE_PERMISSIONS) == 11
    assert len(DIR_PERMISSIONS) == 13


def test_unknown_permission_rejected():
    with pytest.raises(UnknownPermissionError):
        Permission(PermissionClass.FILE, "search")
    with pytest.raises(UnknownPermissionError):
        Permission(PermissionClass.DIR, "lock")


def test_per_kind_neverallow_sets():
    for kind in PropertyKind:
        files, dirs = NEVERALLOW[kind.value]
        ruleset = kind_ruleset({kind})
        got_files = {p.name for p in ruleset.neverallow
                     if p.cls is PermissionClass.FILE}
        got_dirs = {p.name for p in ruleset.neverallow
                    if p.cls is PermissionClass.DIR}
        assert got_files == files, kind
        assert got_dirs == dirs, kind


def test_kind_ruleset_unions():
    combined = kind_ruleset({PropertyKind.CONFIDENTIALITY,
                             PropertyKind.INTEGRITY})
    assert combined.neverallow == (
        kind_ruleset({PropertyKind.CONFIDENTIALITY}).neverallow
        | kind_ruleset({PropertyKind.INTEGRITY}).neverallow)


def test_check_access_deny_overrides():
    ruleset = kind_ruleset({PropertyKind.CONFIDENTIALITY})
    assert check_access(ruleset, PermissionClass.FILE, "read") is Decision.DENIED
    assert check_access(ruleset, PermissionClass.FILE, "write") is Decision.GRANTED
    assert check_access(ruleset, PermissionClass.DIR, "search") is Decision.DENIED
    assert check_access(DEFAULT_RULESET, PermissionClass.FILE, "read") is Decision.GRANTED


def test_sanitize_label_preserves_case():
    assert sanitize_label("domainA") == "domainA_t"
    assert sanitize_label("fee paying") == "fee_paying_t"
    assert sanitize_label("a.b-c") == "a_b_c_t"


def test_object_context():
    assert object_context("domainA").render() == "system_u:object_r:domainA_t"


def test_security_context_parse_render():
    ctx = SecurityContext.parse("user_u:user_r:user_t")
    assert ctx == SecurityContext("user_u", "user_r", "user_t")
    assert ctx.render() == "user_u:user_r:user_t"
    with pytest.raises(Exception):
        SecurityContext.parse("just_two:parts")


class TestCompile:
    def policy(self):
        policy = PeerPolicy(peer_id="A").create_domain("domainA")
        policy = policy.add_property("domainA", confidentiality())
        return policy.add_resource("/root/secret.txt", "domainA")

    def test_compile_single_domain(self):
        compiled = compile_policy(self.policy())
        rules = compiled.domain_rules["domainA"]
        assert check_access(rules, PermissionClass.FILE, "read") is Decision.DENIED
        ctx = compiled.resource_contexts["/root/secret.txt"]
        assert ctx.render() == "system_u:object_r:domainA_t"

    def test_emit_rules_golden(self):
        emitted = emit_rules(compile_policy(self.policy()))
        assert emitted == (
            "domainA:\n"
            "allow file {read write unlink create append mounton rename "
            "lock execute getattr setattr}\n"
            "allow dir {read write unlink search create mounton getattr "
            "setattr rename add_name remove_name reparent rmdir}\n"
            "neverallow file {read append setattr}\n"
            "neverallow dir {read search setattr}\n")

    def test_render_contexts(self):
        compiled = compile_policy(self.policy())
        assert render_contexts(compiled) == (
            "/root/secret.txt system_u:object_r:domainA_t\n")

    def test_resource_stricter_than_domain_gets_own_stanza(self):
        policy = self.policy().add_property("/root/secret.txt", integrity())
        emitted = emit_rules(compile_policy(policy))
        assert "/root/secret.txt:" in emitted
        assert "neverallow file {read write unlink append rename setattr}" \
            in emitted

    def test_parse_rules_inverts_emit(self):
        policy = self.policy().create_domain("open")
        policy = policy.add_property("open", cooperation())
        policy = policy.create_domain("archive")
        policy = policy.add_property("archive", noshare())
        emitted = emit_rules(compile_policy(policy))
        parsed = parse_rules(emitted)
        compiled = compile_policy(policy)
        for name, ruleset in compiled.domain_rules.items():
            assert parsed[name] == ruleset


class TestAvc:
    def test_parse_fields(self):
        record = parse_avc(AVC_LINE)
        assert record.timestamp == "1229395253.757"
        assert record.serial == "369"
        assert record.decision is Decision.DENIED
        assert record.permissions == frozenset({"read"})
        assert record.pid == 4241
        assert record.comm == "vim"
        assert record.name == "secret.txt"
        assert record.dev == "sda3"
        assert record.ino == 179226
        assert record.scontext.render() == "user_u:user_r:user_t"
        assert record.tcontext.render() == "system_u:object_r:domainA_t"
        assert record.tclass == "file"

    def test_render_parse_identity(self):
        assert render_avc(parse_avc(AVC_LINE)) == AVC_LINE

    def test_multi_permission_sorted(self):
        line = AVC_LINE.replace("{ read }", "{ read append }")
        record = parse_avc(line)
        assert record.permissions == frozenset({"read", "append"})
        assert "{ append read }" in render_avc(record)

    def test_granted_parse(self):
        line = AVC_LINE.replace("denied", "granted")
        assert parse_avc(line).decision is Decision.GRANTED

    @pytest.mark.parametrize("mangle", [
        lambda s: s.replace("avc:", "svc:"),
        lambda s: s.replace("pid=", "pud="),
        lambda s: s.replace("{ read }", "{ }"),
        lambda s: s.replace("tclass=file", ""),
        lambda s: s.replace("audit(", "audit["),
        lambda s: s + " trailing=1",
    ])
    def test_mangled_lines_rejected(self, mangle):
        with pytest.raises(AvcParseError):
            parse_avc(mangle(AVC_LINE))


class TestChallenge:
    def compiled(self):
        policy = PeerPolicy(peer_id="A").create_domain("domainA")
        policy = policy.add_property("domainA", confidentiality())
        policy = policy.add_resource("/root/secret.txt", "domainA")
        return compile_policy(policy)

    def subject(self):
        return SecurityContext("user_u", "user_r", "user_t")

    def test_make_challenge_command(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        assert challenge.command == (
            "scontext=user_u:user_r:user_t vim /root/secret.txt")
        assert challenge.expected is Decision.DENIED
        assert challenge.expected_permissions == frozenset({"read"})
        assert challenge.target_name == "secret.txt"

    def test_verify_against_matching_record(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        assert verify_challenge(challenge, [parse_avc(AVC_LINE)]).passed

    def test_verify_empty_trace_fails(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        result = verify_challenge(challenge, [])
        assert not result.passed

    def test_verify_wrong_decision_fails(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        granted = parse_avc(AVC_LINE.replace("denied", "granted"))
        assert not verify_challenge(challenge, [granted]).passed

    def test_verify_wrong_label_fails(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        other = parse_avc(AVC_LINE.replace("domainA_t", "other_t"))
        assert not verify_challenge(challenge, [other]).passed

    def test_verify_scans_past_unrelated_records(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        unrelated = parse_avc(AVC_LINE.replace("secret.txt", "other.txt"))
        good = parse_avc(AVC_LINE)
        assert verify_challenge(challenge, [unrelated, good]).passed

    def test_unknown_resource(self):
        with pytest.raises(UnknownResourceError):
            make_challenge("/nope", self.subject(), "vim", self.compiled())

    def test_unknown_stub(self):
        with pytest.raises(ChallengeError):
            make_challenge("/root/secret.txt", self.subject(), "wget",
                           self.compiled())

    def test_challenge_file_round_trip(self):
        challenge = make_challenge("/root/secret.txt", self.subject(),
                                   "vim", self.compiled())
        assert parse_challenge(render_challenge(challenge)) == challenge
