import hashlib
import json

import pytest

from disruptkit.classify import (
    PROMPT_TEMPLATE,
    AgreementReport,
    BackendConfig,
    Classification,
    ResponseCache,
    agreement_report,
    cache_key,
    classify_batch,
    format_percent,
    parse_response,
    render_prompt,
    stub_backend,
)
from disruptkit.corpus import PaperRecord
from disruptkit.synth import synth_corpus

from httpstub import RecordingServer, completion

KEY_ENV = "DISRUPTKIT_API_KEY"


def mk(paper_id, title="A title", abstract="An abstract", gold=None):
    return PaperRecord(
        id=paper_id, title=title, abstract=abstract, journal="j",
        year=2000, n_authors=1, references=(), gold_label=gold,
    )


class TestPrompt:
    def test_contains_both_definitions(self):
        prompt = render_prompt("T", "A")
        assert "There are two types of articles published in the Journal of Marketing" in prompt
        assert ("1. Conceptual articles: These types of articles make their "
                "contributions through theoretical arguments") in prompt
        assert ("2. Empirical articles: Empirical articles use organized "
                "observations") in prompt
        assert 'classify an academic article with title "T" and abstract "A"' in prompt
        assert ('Your response will be in a format "This article is in the '
                '[Category] because [Reasons]"') in prompt

    def test_template_has_exactly_two_slots(self):
        assert PROMPT_TEMPLATE.count("%s") == 2

    def test_percent_signs_pass_through(self):
        # substitution must not be printf-style
        prompt = render_prompt("Sales grew 100%", "We saw %s and %d patterns")
        assert "Sales grew 100%" in prompt
        assert "We saw %s and %d patterns" in prompt

    def test_rejects_empty_inputs(self):
        with pytest.raises(ValueError, match="title"):
            render_prompt("", "A")
        with pytest.raises(ValueError, match="abstract"):
            render_prompt("T", "")


class TestParseResponse:
    def test_template_form(self):
        label, rationale = parse_response(
            "This article is in the conceptual category because it builds a new theory."
        )
        assert label == "Conceptual"
        assert rationale == "it builds a new theory."

    def test_template_form_with_brackets_and_case(self):
        label, _ = parse_response(
            "THIS ARTICLE IS IN THE [Empirical] category BECAUSE of the data."
        )
        assert label == "Empirical"

    def test_template_form_spans_lines(self):
        label, rationale = parse_response(
            "This article is in the\nempirical category\nbecause the panel\nshows it."
        )
        assert label == "Empirical"
        assert "panel" in rationale

    def test_free_text_with_single_token(self):
        label, rationale = parse_response("Clearly an empirical piece of work.")
        assert label == "Empirical"
        assert rationale == "Clearly an empirical piece of work."

    def test_both_tokens_is_other(self):
        label, _ = parse_response(
            "It is both conceptual and empirical in equal measure."
        )
        assert label == "Other"

    def test_neither_token_is_other(self):
        label, rationale = parse_response("I cannot tell.")
        assert label == "Other"
        assert rationale == "I cannot tell."

    def test_ambiguous_category_chunk_falls_back_to_full_scan(self):
        # the chunk before 'because' names both categories; the full text
        # scan then also sees both, so the response lands in Other
        label, _ = parse_response(
            "This article is in the conceptual or empirical category because unsure."
        )
        assert label == "Other"


class TestClassificationType:
    def test_rejects_unknown_label(self):
        with pytest.raises(ValueError, match="label"):
            Classification(paper_id="p", label="Mixed", rationale="", source="stub")

    def test_rejects_unknown_source(self):
        with pytest.raises(ValueError, match="source"):
            Classification(paper_id="p", label="Other", rationale="", source="oracle")

    def test_ok_flag(self):
        good = Classification(paper_id="p", label="Other", rationale="", source="backend")
        bad = Classification(paper_id="p", label="Other", rationale="", source="error")
        assert good.ok and not bad.ok


class TestBackendConfig:
    def test_temperature_pinned_to_zero(self):
        with pytest.raises(ValueError, match="temperature"):
            BackendConfig(endpoint="http://x", model="m", temperature=0.5)

    def test_bounds(self):
        with pytest.raises(ValueError, match="max_in_flight"):
            BackendConfig(endpoint="http://x", model="m", max_in_flight=0)
        with pytest.raises(ValueError, match="retries"):
            BackendConfig(endpoint="http://x", model="m", retries=-1)
        with pytest.raises(ValueError, match="backoff_base"):
            BackendConfig(endpoint="http://x", model="m", backoff_base=-0.1)


class TestCache:
    def test_key_separates_model_from_prompt(self):
        assert cache_key("ab", "c") != cache_key("a", "bc")
        assert cache_key("m", "p") == cache_key("m", "p")

    def test_put_get_roundtrip(self, tmp_path):
        cache = ResponseCache(tmp_path / "cache.jsonl")
        assert cache.get("m", "p") is None
        cache.put("m", "p", "Conceptual", "why")
        assert cache.get("m", "p") == ("Conceptual", "why")
        assert len(cache) == 1

    def test_reload_from_disk_and_later_wins(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        first = ResponseCache(path)
        first.put("m", "p", "Conceptual", "old")
        first.put("m", "p", "Empirical", "new")
        reloaded = ResponseCache(path)
        assert reloaded.get("m", "p") == ("Empirical", "new")
        assert len(path.read_text().splitlines()) == 2  # append-only

    def test_line_fields(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        ResponseCache(path).put("m", "p", "Other", "r")
        record = json.loads(path.read_text().splitlines()[0])
        assert set(record) == {"key_hash", "model", "label", "rationale", "timestamp"}
        assert record["key_hash"] == cache_key("m", "p")

    def test_corrupt_line_names_lineno(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text('{"key_hash": "k", "label": "Other", "rationale": ""}\n{broken\n')
        with pytest.raises(ValueError, match="line 2"):
            ResponseCache(path)


class TestStubBackend:
    def test_deterministic(self):
        prompt = render_prompt("Some title", "Some abstract text")
        assert stub_backend(prompt) == stub_backend(prompt)

    def test_cue_dominance(self):
        conceptual = stub_backend(render_prompt(
            "Toward a theory of exchange",
            "We develop a conceptual framework with testable propositions.",
        ))
        empirical = stub_backend(render_prompt(
            "Pricing in retail chains",
            "Using panel data from 300 stores we run a regression on a large sample.",
        ))
        assert parse_response(conceptual)[0] == "Conceptual"
        assert parse_response(empirical)[0] == "Empirical"

    def test_template_words_do_not_leak_into_scores(self):
        # the surrounding prompt names both categories repeatedly; a lone
        # cue in the abstract must still decide the label
        response = stub_backend(render_prompt(
            "A study of shelf placement",
            "We analyze scanner data collected from four supermarkets.",
        ))
        assert parse_response(response)[0] == "Empirical"

    def test_tie_breaks_on_content_hash_parity(self):
        prompt = render_prompt("Neutral title", "Nothing decisive is said here.")
        expected = "conceptual" if hashlib.sha256(
            prompt.encode("utf-8")).digest()[-1] % 2 == 0 else "empirical"
        label, rationale = parse_response(stub_backend(prompt))
        assert label.lower() == expected
        assert "tie" in rationale

    def test_response_follows_requested_template(self):
        response = stub_backend(render_prompt("T", "A"))
        assert response.startswith("This article is in the ")
        assert " because " in response

    def test_recovers_generated_labels(self):
        corpus = synth_corpus(n_papers=60, seed=3)
        records = list(corpus)
        results = classify_batch(records, backend=stub_backend)
        report = agreement_report(results, records)
        assert report.overall_accuracy == 1.0


@pytest.fixture
def backend_server():
    server = RecordingServer()
    yield server
    server.close()


def http_config(server, **kwargs):
    defaults = dict(endpoint=server.endpoint, model="test-model",
                    retries=1, backoff_base=0.0, timeout=5.0)
    defaults.update(kwargs)
    return BackendConfig(**defaults)


class TestHttpBackend:
    def test_request_shape_and_result(self, backend_server, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        records = [mk("p1", title="T1", abstract="A1")]
        [result] = classify_batch(records, config=http_config(backend_server))
        assert result.label == "Empirical"
        assert result.source == "backend"
        [call] = backend_server.calls
        assert call["authorization"] == "Bearer sk-test"
        assert call["body"]["model"] == "test-model"
        assert call["body"]["temperature"] == 0.0
        [message] = call["body"]["messages"]
        assert message["role"] == "user"
        assert message["content"] == render_prompt("T1", "A1")

    def test_responses_populate_cache_and_rerun_is_local(self, backend_server,
                                                         tmp_path, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        cache = ResponseCache(tmp_path / "cache.jsonl")
        records = [mk("p1", title="T1"), mk("p2", title="T2")]
        config = http_config(backend_server)
        first = classify_batch(records, config=config, cache=cache)
        assert [r.source for r in first] == ["backend", "backend"]
        assert len(backend_server.calls) == 2

        warm = ResponseCache(tmp_path / "cache.jsonl")
        second = classify_batch(records, config=config, cache=warm)
        assert [r.source for r in second] == ["cache", "cache"]
        assert [r.label for r in second] == [r.label for r in first]
        assert len(backend_server.calls) == 2  # no new requests

    def test_warm_cache_needs_no_api_key(self, backend_server, tmp_path, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        cache = ResponseCache(tmp_path / "cache.jsonl")
        records = [mk("p1")]
        config = http_config(backend_server)
        classify_batch(records, config=config, cache=cache)

        monkeypatch.delenv(KEY_ENV)
        [result] = classify_batch(records, config=config, cache=cache)
        assert result.source == "cache"

    def test_missing_api_key_fails_before_any_request(self, backend_server,
                                                      monkeypatch):
        monkeypatch.delenv(KEY_ENV, raising=False)
        with pytest.raises(RuntimeError, match=KEY_ENV):
            classify_batch([mk("p1")], config=http_config(backend_server))
        assert backend_server.calls == []

    def test_transient_errors_are_retried(self, backend_server, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        ok = completion("This article is in the conceptual category because theory.")
        backend_server.server.behavior = lambda n, body: (
            (500, "{}") if n == 0 else (429, "{}") if n == 1 else (200, ok)
        )
        config = http_config(backend_server, retries=3)
        [result] = classify_batch([mk("p1")], config=config)
        assert result.label == "Conceptual"
        assert result.source == "backend"
        assert len(backend_server.calls) == 3

    def test_permanent_failure_yields_error_entry(self, backend_server, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        ok = completion("This article is in the conceptual category because theory.")
        # first record always fails, second succeeds; distinct titles give
        # distinct prompts, and responses are matched by position
        failures = {"T-fail"}

        def behavior(n, body):
            if any(t in body["messages"][0]["content"] for t in failures):
                return 500, "{}"
            return 200, ok

        backend_server.server.behavior = behavior
        records = [mk("bad", title="T-fail"), mk("good", title="T-ok")]
        config = http_config(backend_server, retries=1, max_in_flight=1)
        results = classify_batch(records, config=config)
        assert results[0].source == "error"
        assert results[0].label == "Other"
        assert "HTTP 500" in results[0].rationale
        assert results[1].source == "backend"
        # the failing record consumed exactly 1 + retries attempts
        n_fail_calls = sum(1 for c in backend_server.calls
                           if "T-fail" in c["body"]["messages"][0]["content"])
        assert n_fail_calls == 2

    def test_client_errors_are_not_retried(self, backend_server, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        backend_server.server.behavior = lambda n, body: (400, '{"error": "bad"}')
        config = http_config(backend_server, retries=3)
        [result] = classify_batch([mk("p1")], config=config)
        assert result.source == "error"
        assert len(backend_server.calls) == 1

    def test_malformed_success_body_is_an_error_without_retry(self, backend_server,
                                                              monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        backend_server.server.behavior = lambda n, body: (200, '{"unexpected": true}')
        config = http_config(backend_server, retries=3)
        [result] = classify_batch([mk("p1")], config=config)
        assert result.source == "error"
        assert "malformed" in result.rationale
        assert len(backend_server.calls) == 1

    def test_in_flight_bound_is_respected(self, backend_server, monkeypatch):
        monkeypatch.setenv(KEY_ENV, "sk-test")
        backend_server.server.delay = 0.1
        records = [mk(f"p{i}", title=f"T{i}") for i in range(6)]
        config = http_config(backend_server, max_in_flight=2)
        results = classify_batch(records, config=config)
        assert len(results) == 6
        assert len(backend_server.calls) == 6
        assert backend_server.server.max_active <= 2

    def test_stub_path_never_touches_the_network(self, monkeypatch):
        def boom(*args, **kwargs):
            raise AssertionError("network call attempted")

        monkeypatch.setattr("disruptkit.classify.requests.post", boom)
        results = classify_batch([mk("p1")], backend=stub_backend)
        assert results[0].source == "stub"

    def test_stub_path_ignores_cache(self, tmp_path, monkeypatch):
        cache = ResponseCache(tmp_path / "cache.jsonl")
        classify_batch([mk("p1")], cache=cache, backend=stub_backend)
        assert len(cache) == 0
        assert not (tmp_path / "cache.jsonl").exists()

    def test_requires_config_or_backend(self):
        with pytest.raises(ValueError, match="backend callable or a BackendConfig"):
            classify_batch([mk("p1")])


class TestAgreement:
    def test_format_percent_half_up(self):
        assert format_percent(26, 28) == "92.9%"
        assert format_percent(194, 214) == "90.7%"
        assert format_percent(111, 115) == "96.5%"
        assert format_percent(22, 23) == "95.7%"
        assert format_percent(1, 8) == "12.5%"
        assert format_percent(1, 16) == "6.3%"  # 6.25 rounds up
        assert format_percent(0, 0) == "NA"

    def test_report_percentages(self):
        report = AgreementReport(
            gold_counts={"conceptual": 28, "empirical": 214},
            correct_counts={"conceptual": 26, "empirical": 194},
        )
        assert report.percent("conceptual") == "92.9%"
        assert report.percent("empirical") == "90.7%"
        assert report.overall_percent() == "90.9%"
        assert report.accuracy["conceptual"] == pytest.approx(26 / 28)
        assert report.overall_accuracy == pytest.approx(220 / 242)

    def test_agreement_matching_is_case_insensitive(self):
        records = [mk("a", gold="conceptual"), mk("b", gold="empirical")]
        predictions = [
            Classification(paper_id="a", label="Conceptual", rationale="", source="stub"),
            Classification(paper_id="b", label="Other", rationale="", source="stub"),
        ]
        report = agreement_report(predictions, records)
        assert report.gold_counts == {"conceptual": 1, "empirical": 1}
        assert report.correct_counts == {"conceptual": 1, "empirical": 0}

    def test_records_without_gold_are_skipped(self):
        records = [mk("a", gold="conceptual"), mk("b")]
        predictions = [
            Classification(paper_id="a", label="Conceptual", rationale="", source="stub"),
        ]
        report = agreement_report(predictions, records)
        assert report.gold_counts == {"conceptual": 1}

    def test_missing_prediction_names_record(self):
        records = [mk("a", gold="conceptual")]
        with pytest.raises(ValueError, match="'a'"):
            agreement_report([], records)
