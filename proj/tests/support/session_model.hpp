#pragma once

#include <casbridge/mock_script.hpp>
#include <casbridge/session.hpp>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace casbridge::testing {

inline std::shared_ptr<const BackendProfile> model_profile() {
    static const auto reg = load_profiles(R"yaml(
profiles:
  - name: model
    command: [model]
    example_prompt: 'in[3] '
    input_prompt: '^in\[(\d+)\] ?$'
    aux_prompts:
      - kind: debugger
        pattern: '^dbg(\d+)> ?$'
    questions:
      - pattern: '^Continue\? ?$'
        answer_kind: yes_no
        answers: [y, n]
      - pattern: '^Value for \w+: ?$'
        answer_kind: free_text
    quit_command: quit
    end_marker: 'goodbye'
)yaml");
    return reg.find("model");
}

// What the script makes the session wait for after each batch of output.
enum class Wait { prompt, aux, yes_no, free_text, end, exhausted };

struct ModelScript {
    MockScript script;
    std::vector<Wait> waits;
    std::vector<std::string> labels;
};

inline ModelScript random_script(std::mt19937& rng) {
    ModelScript m;
    m.script.profile = "model";
    const auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    const int blocks = 1 + pick(8);
    for (int b = 0; b < blocks; ++b) {
        std::string out;
        for (int k = pick(4); k > 0; --k) {
            switch (pick(3)) {
                case 0: out += "result line " + std::to_string(pick(100)) + "\n"; break;
                case 1: out += latex_frame("x^{" + std::to_string(pick(9)) + "}"); break;
                default: out += "Continue?\nnot a question\n"; break;
            }
        }
        const bool last = b + 1 == blocks;
        Wait w = static_cast<Wait>(pick(4));
        if (last && pick(2) == 0) w = pick(2) ? Wait::end : Wait::exhausted;
        std::string label;
        switch (w) {
            case Wait::prompt:
                label = std::to_string(b + 1);
                out += "in[" + label + "] ";
                break;
            case Wait::aux:
                label = std::to_string(1 + pick(3));
                out += "dbg" + label + "> ";
                break;
            case Wait::yes_no: out += "Continue? "; break;
            case Wait::free_text: out += "Value for n: "; break;
            case Wait::end: out += "goodbye\n"; break;
            case Wait::exhausted: break;
        }
        if (!out.empty()) {
            // Split the block over several emit steps now and then.
            std::size_t pos = 0;
            while (pos < out.size()) {
                const auto n = pick(3) == 0 ? out.size() - pos : std::min(out.size() - pos, std::size_t(1 + pick(12)));
                ScriptStep st;
                st.text = out.substr(pos, n);
                pos += n;
                st.quiesce = pos == out.size();
                m.script.steps.push_back(st);
            }
        }
        m.waits.push_back(w);
        m.labels.push_back(label);
        if (w == Wait::end || w == Wait::exhausted) break;
        ScriptStep ex;
        ex.kind = ScriptStep::Kind::expect_input;
        ex.text = w == Wait::yes_no ? (pick(2) ? "y" : "n") : "input " + std::to_string(b);
        m.script.steps.push_back(ex);
        if (last) {
            m.waits.push_back(Wait::exhausted);
            m.labels.emplace_back();
        }
    }
    return m;
}

// The reference machine: states follow from the script's wait points alone.
class Model {
public:
    explicit Model(const ModelScript& s) : s_(s) {}

    SessionState state() const { return state_; }
    bool accepts() const { return state_.accepts_input(); }

    void pump() {
        if (state_.ended() || accepts()) return;
        const Wait w = s_.waits.at(block_);
        const auto& label = s_.labels.at(block_);
        switch (w) {
            case Wait::prompt: state_ = SessionState::at_prompt(label, "input"); break;
            case Wait::aux: state_ = SessionState::at_prompt(label, "debugger"); break;
            case Wait::yes_no:
            case Wait::free_text:
                state_ = SessionState::of(StateKind::awaiting_answer);
                state_.question = question(w);
                break;
            case Wait::end: end(EndReason::backend_quit); break;
            case Wait::exhausted: end(EndReason::replay_exhausted); break;
        }
    }

    void input() {
        state_ = SessionState::of(StateKind::computing);
        ++block_;
    }

    void terminate() { end(EndReason::client_request); }

    std::string expected_input() const {
        std::size_t seen = 0;
        for (const auto& st : s_.script.steps) {
            if (st.kind == ScriptStep::Kind::expect_input && seen++ == block_) return st.text;
        }
        return {};
    }

    Wait wait() const { return s_.waits.at(block_); }

private:
    static QuestionRule question(Wait w) {
        for (const auto& q : model_profile()->questions) {
            if ((w == Wait::yes_no) == (q.answer_kind == AnswerKind::yes_no)) return q;
        }
        return {};
    }

    void end(EndReason r) {
        if (state_.ended()) return;
        state_ = SessionState::of(StateKind::ended);
        state_.reason = r;
    }

    const ModelScript& s_;
    SessionState state_;
    std::size_t block_ = 0;
};

struct MachineStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t divergences = 0;
    std::string first_divergence;
};

// Drives random operation sequences against both a session and the model
// until at least `min_steps` operations ran, counting every disagreement.
inline MachineStats run_state_machine(std::uint32_t seed, std::size_t min_steps) {
    std::mt19937 rng(seed);
    MachineStats st;
    const auto diverge = [&](const std::string& what) {
        if (st.divergences++ == 0) st.first_divergence = what;
    };
    SessionOptions opt;
    opt.auto_pump = false;
    opt.clock = [] { return std::int64_t{0}; };
    for (int round = 0; st.steps < min_steps; ++round) {
        const auto ms = random_script(rng);
        Session s("m" + std::to_string(round), model_profile(), SessionMode::replay, ms.script, opt);
        Model model(ms);
        s.start();
        const auto where = [&](int op) { return "round " + std::to_string(round) + " op " + std::to_string(op) + ": "; };
        if (!(s.state() == model.state())) diverge(where(-1) + "initial state");
        for (int op = 0; op < 40; ++op, ++st.steps) {
            const auto before = s.events();
            const auto expect_error = [&](auto&& f, ErrorCode want) {
                try {
                    f();
                } catch (const SessionError& e) {
                    ++st.rejected;
                    if (e.code() != want) diverge(where(op) + "error " + std::string(to_string(e.code())) + ", expected " + std::string(to_string(want)));
                    if (!(s.events() == before)) diverge(where(op) + "events changed by a rejected call");
                    return;
                }
                diverge(where(op) + "call accepted; expected " + std::string(to_string(want)));
            };
            switch (rng() % 6) {
                case 0:
                case 1:
                    s.pump();
                    model.pump();
                    break;
                case 2:
                    if (model.accepts()) {
                        const auto seq = s.send_input(model.expected_input());
                        if (seq != before.size()) diverge(where(op) + "input seq");
                        model.input();
                    } else {
                        expect_error([&] { s.send_input("input 0"); }, ErrorCode::wrong_state);
                    }
                    break;
                case 3:
                    if (!model.accepts()) {
                        expect_error([&] { s.send_input("anything"); }, ErrorCode::wrong_state);
                    } else if (model.wait() == Wait::yes_no) {
                        expect_error([&] { s.send_input("perhaps"); }, ErrorCode::invalid_answer);
                    } else {
                        expect_error([&] { s.send_input("not scripted"); }, ErrorCode::replay_mismatch);
                    }
                    break;
                case 4: {
                    const auto after = static_cast<std::int64_t>(rng() % (before.size() + 2)) - 1;
                    const auto polled = s.poll_events(after);
                    const auto skip = static_cast<std::size_t>(std::min<std::int64_t>(after + 1, static_cast<std::int64_t>(before.size())));
                    if (polled.size() != before.size() - skip) diverge(where(op) + "poll_events count");
                    break;
                }
                default:
                    if (rng() % 8 == 0) {
                        const auto r = s.terminate();
                        if (r.already_ended != model.state().ended()) diverge(where(op) + "already_ended");
                        model.terminate();
                    } else {
                        s.pump();
                        model.pump();
                    }
                    break;
            }
            if (!(s.state() == model.state())) {
                diverge(where(op) + "state " + state_to_json(s.state()).dump() + ", model " + state_to_json(model.state()).dump());
                break;
            }
            const auto evs = s.events();
            for (std::size_t i = 0; i < evs.size(); ++i) {
                if (evs[i].seq != i) {
                    diverge(where(op) + "seq gap");
                    break;
                }
                // Input is only ever recorded right after a point where the session waited for it.
                if (evs[i].kind != EventKind::client_input) continue;
                const auto k = i == 0 ? EventKind::client_input : evs[i - 1].kind;
                if (k != EventKind::input_prompt && k != EventKind::aux_prompt && k != EventKind::question) {
                    diverge(where(op) + "input recorded after " + std::string(to_string(k)));
                }
            }
            if (model.state().ended()) break;
        }
    }
    return st;
}

inline SessionEvent random_event(std::mt19937& rng, std::uint64_t seq) {
    const auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    const auto str = [&](int max) {
        static const std::string alphabet = std::string("ab \n\t\"\\{}$^_") + "\x02\x05" + "é∫" + "\xff\xc3";
        std::string s;
        for (int i = pick(max); i > 0; --i) s += alphabet[static_cast<std::size_t>(pick(static_cast<int>(alphabet.size())))];
        return s;
    };
    SessionEvent e;
    e.seq = seq;
    e.at = static_cast<std::int64_t>(rng()) * 1000;
    e.kind = kAllEventKinds[pick(static_cast<int>(std::size(kAllEventKinds)))];
    e.raw = str(30);
    if (pick(2)) e.label = str(5);
    if (pick(3) == 0) e.aux_kind = "debugger";
    if (pick(2)) e.latex = "\\frac{" + std::to_string(pick(9)) + "}{2}";
    if (pick(4) == 0) {
        QuestionRule q;
        q.pattern = Pattern("^Continue\\?$");
        q.answer_kind = static_cast<AnswerKind>(pick(3));
        if (pick(2)) q.echo_label = "label";
        if (q.answer_kind != AnswerKind::free_text) q.answers = {"y", "n"};
        e.question = q;
    }
    if (pick(4) == 0) e.plot_path = "save.mp";
    if (pick(2)) e.byte_range = ByteRange{static_cast<std::size_t>(pick(1000)), static_cast<std::size_t>(1000 + pick(1000))};
    if (pick(3) == 0) e.text = str(10);
    return e;
}

}  // namespace casbridge::testing
