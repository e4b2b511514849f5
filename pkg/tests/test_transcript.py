from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from teamcoach.transcript import (
    EmptyTranscriptError,
    TranscriptParseError,
    TranscriptSchemaError,
    UnknownMemberError,
    bundle_export_dir,
    dumps_transcript,
    format_for_prompt,
    load_transcript,
    member_view,
    parse_transcript,
)


def canonical(messages, members=(("U1", "alias-1"), ("U2", "alias-2"))):
    return json.dumps(
        {
            "schema_version": 1,
            "channel_id": "C1",
            "task_goal": "rank things",
            "members": [{"id": i, "alias": a} for i, a in members],
            "messages": [{"sender_id": s, "ts": ts, "text": text} for s, ts, text in messages],
        }
    )


def test_fixture_loads_in_order(team_three):
    assert team_three.channel_id == "C-team-3"
    assert team_three.member_ids == ("U1", "U2", "U3")
    assert len(team_three.messages) == 8
    stamps = [m.timestamp for m in team_three.messages]
    assert stamps == sorted(stamps)
    assert team_three.start == datetime(2024, 5, 1, 12, 0, tzinfo=timezone.utc)
    assert team_three.end - team_three.start == timedelta(minutes=6)


def test_messages_are_sorted_by_timestamp():
    t = parse_transcript(
        canonical([("U2", "2024-01-01T10:05:00Z", "second"), ("U1", "2024-01-01T10:00:00Z", "first")])
    )
    assert [m.text for m in t.messages] == ["first", "second"]


def test_offsets_are_normalised_to_utc():
    t = parse_transcript(canonical([("U1", "2024-01-01T12:00:00+02:00", "hi")]))
    assert t.messages[0].timestamp == datetime(2024, 1, 1, 10, 0, tzinfo=timezone.utc)


def test_naive_timestamp_rejected():
    with pytest.raises(TranscriptSchemaError):
        parse_transcript(canonical([("U1", "2024-01-01T12:00:00", "hi")]))


def test_whitespace_messages_dropped_and_counted():
    t = parse_transcript(canonical([("U1", "2024-01-01T10:00:00Z", "  "), ("U2", "2024-01-01T10:01:00Z", "ok")]))
    assert t.dropped_empty == 1
    assert len(t.messages) == 1


def test_all_empty_is_an_error():
    with pytest.raises(EmptyTranscriptError):
        parse_transcript(canonical([("U1", "2024-01-01T10:00:00Z", "\n")]))


def test_unknown_sender_rejected():
    with pytest.raises(TranscriptSchemaError, match="unknown sender"):
        parse_transcript(canonical([("U9", "2024-01-01T10:00:00Z", "hi")]))


def test_malformed_json_reports_byte_offset():
    raw = '{"channel_id": "C1", "members": [}'
    with pytest.raises(TranscriptParseError) as info:
        parse_transcript(raw)
    assert info.value.offset == raw.index("}")


def test_invalid_utf8_reports_offset():
    raw = b'{"a": "\xff"}'
    with pytest.raises(TranscriptParseError) as info:
        parse_transcript(raw)
    assert info.value.offset == 7


def test_excluded_sender_removed_with_membership():
    t = parse_transcript(
        canonical(
            [("U1", "2024-01-01T10:00:00Z", "hello"), ("BOT", "2024-01-01T10:01:00Z", "feedback")],
            members=(("U1", "alias-1"), ("BOT", "coach")),
        ),
        exclude_senders=["BOT"],
    )
    assert t.member_ids == ("U1",)
    assert [m.text for m in t.messages] == ["hello"]


def test_round_trip(team_three):
    again = parse_transcript(dumps_transcript(team_three))
    assert again == team_three


def test_resolve_member_by_id_or_alias(team_three):
    assert team_three.resolve_member("U2") == "U2"
    assert team_three.resolve_member("alias-3") == "U3"
    with pytest.raises(UnknownMemberError):
        team_three.resolve_member("nobody")


def test_after_watermark(team_three):
    cut = datetime(2024, 5, 1, 12, 4, tzinfo=timezone.utc)
    newer = team_three.after(cut)
    assert newer is not None
    assert [m.sender_id for m in newer.messages] == ["U2", "U3"]
    assert team_three.after(team_three.end) is None
    assert team_three.after(None) == team_three


def test_member_view_text(team_three):
    view = member_view(team_three, "U2")
    assert [m.text for m in view.messages][-1] == "Put them last."
    with pytest.raises(UnknownMemberError):
        member_view(team_three, "alias-2")


def test_format_for_prompt_uses_aliases(team_three):
    lines = format_for_prompt(team_three.messages).split("\n")
    assert lines[0] == "[2024-05-01T12:00:00Z] alias-1: Hi team, I think oxygen should be first."
    assert len(lines) == 8


def _export_doc():
    return {
        "channel": {"id": "C7", "name": "team-7", "members": ["U1", "U2"], "purpose": {"value": "rank it"}},
        "users": [
            {"id": "U1", "name": "Real Name", "profile": {"display_name": "alias-a"}},
            {"id": "U2", "name": "", "profile": {}},
        ],
        "messages": [
            {"type": "message", "user": "U2", "ts": "1714564860.000100", "text": "second"},
            {"type": "message", "user": "U1", "ts": "1714564800.000200", "text": "first"},
            {"type": "message", "subtype": "channel_join", "user": "U2", "ts": "1714564700.0", "text": "joined"},
        ],
    }


def test_chat_export_layout():
    t = parse_transcript(json.dumps(_export_doc()), "chat-export")
    assert t.channel_id == "C7"
    assert t.task_goal == "rank it"
    assert [m.text for m in t.messages] == ["first", "second"]
    assert t.messages[0].timestamp.microsecond == 200
    assert t.alias_of("U1") == "alias-a"
    # no display name: a generated alias, never the account name
    assert t.alias_of("U2") == "alias-1"


def test_format_autodetected(tmp_path):
    p = tmp_path / "export.json"
    p.write_text(json.dumps(_export_doc()), encoding="utf-8")
    assert load_transcript(p).channel_id == "C7"


def test_export_directory(tmp_path):
    doc = _export_doc()
    (tmp_path / "users.json").write_text(json.dumps(doc["users"]))
    (tmp_path / "channels.json").write_text(json.dumps([doc["channel"]]))
    day = tmp_path / "team-7"
    day.mkdir()
    (day / "2024-05-01.json").write_text(json.dumps(doc["messages"]))
    assert bundle_export_dir(tmp_path)["channel"]["id"] == "C7"
    assert len(load_transcript(tmp_path).messages) == 2
