#include <casbridge/segmenter.hpp>

#include "support/testdata.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace casbridge;
namespace cbt = casbridge::testing;

namespace {

std::shared_ptr<const BackendProfile> profile(const std::string& name) {
    static const auto reg = builtin_registry();
    return reg.find(name);
}

std::string frame(std::string_view latex) {
    std::string s(1, kFrameOpen);
    s += kLatexTag;
    s += latex;
    s += kFrameClose;
    return s;
}

// One corpus as the session layer sees it: emit chunks, each optionally
// followed by a quiescence tick.
struct Stream {
    std::vector<std::pair<std::string, bool>> parts;
    std::string bytes() const {
        std::string all;
        for (const auto& [b, _] : parts) all += b;
        return all;
    }
};

Stream corpus_stream(const MockScript& s) {
    Stream out;
    for (const auto& st : s.steps) {
        if (st.kind == ScriptStep::Kind::emit) out.parts.emplace_back(st.text, st.quiesce);
    }
    return out;
}

template <class Split>
std::vector<Segment> segment(const std::string& profile_name, const Stream& stream, Split split) {
    Segmenter seg(profile(profile_name));
    std::vector<Segment> out;
    const auto take = [&](std::vector<Segment> v) {
        for (auto& s : v) out.push_back(std::move(s));
    };
    for (const auto& [bytes, tick] : stream.parts) {
        for (const auto& chunk : split(bytes)) {
            seg.feed(chunk);
            take(seg.drain());
        }
        if (tick) take(seg.quiescence_tick());
    }
    take(seg.quiescence_tick());
    return out;
}

std::vector<std::string> whole(const std::string& s) { return {s}; }

std::vector<std::string> bytewise(const std::string& s) {
    std::vector<std::string> out;
    for (char c : s) out.emplace_back(1, c);
    return out;
}

struct RandomSplit {
    std::mt19937* rng;
    std::vector<std::string> operator()(const std::string& s) const {
        std::vector<std::string> out;
        std::size_t pos = 0;
        std::geometric_distribution<std::size_t> len(0.08);
        while (pos < s.size()) {
            const auto n = std::min(s.size() - pos, 1 + len(*rng));
            out.push_back(s.substr(pos, n));
            pos += n;
        }
        return out;
    }
};

std::string concat_raw(const std::vector<Segment>& segs) {
    std::string all;
    for (const auto& s : segs) all += s.raw;
    return all;
}

void expect_well_formed(const std::vector<Segment>& segs) {
    std::size_t at = 0;
    for (const auto& s : segs) {
        EXPECT_FALSE(s.raw.empty());
        EXPECT_EQ(s.byte_range.begin, at);
        EXPECT_EQ(s.byte_range.end, at + s.raw.size());
        at = s.byte_range.end;
        if (s.kind == SegmentKind::math) {
            ASSERT_TRUE(s.latex.has_value());
            EXPECT_EQ(s.raw, frame(*s.latex));
        } else if (s.kind != SegmentKind::plain_text) {
            EXPECT_EQ(s.raw.find(kFrameOpen), std::string::npos);
        }
    }
}

}  // namespace

TEST(Segmenter, PromptAfterTick) {
    Segmenter s(profile("maxima"));
    s.feed("(C1) ");
    EXPECT_TRUE(s.drain().empty());
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::input_prompt);
    EXPECT_EQ(out[0].label, std::optional<std::string>("C1"));
    EXPECT_EQ(out[0].raw, "(C1) ");
}

TEST(Segmenter, MathFrame) {
    const std::string latex = "$\\frac{x^2-y^2}{y^2+x^2}+\\sin^2 \\alpha$";
    Segmenter s(profile("maxima"));
    s.feed(frame(latex));
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::math);
    EXPECT_EQ(out[0].latex, std::optional<std::string>(latex));
    EXPECT_EQ(out[0].raw, frame(latex));
}

TEST(Segmenter, MathLabelCaptured) {
    Segmenter s(profile("maxima"));
    s.feed(frame("\\text{(D4)} \\frac{a}{2}"));
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].label, std::optional<std::string>("D4"));
}

TEST(Segmenter, EmptyFeed) {
    Segmenter s(profile("maxima"));
    s.feed("");
    EXPECT_TRUE(s.drain().empty());
    EXPECT_TRUE(s.quiescence_tick().empty());
    EXPECT_EQ(s.buffered(), 0u);
}

TEST(Segmenter, DrainEmptiesQueue) {
    Segmenter s(profile("maxima"));
    s.feed("(C1) ");
    ASSERT_EQ(s.quiescence_tick().size(), 1u);
    s.feed("one\ntwo\n");
    EXPECT_EQ(s.drain().size(), 2u);
    EXPECT_TRUE(s.drain().empty());
}

TEST(Segmenter, BannerBlock) {
    const auto script = cbt::load_corpus("corpus1");
    const std::string banner = script.steps.at(0).text;
    Segmenter s(profile("maxima"));
    s.feed(banner);
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::banner);
    EXPECT_EQ(out[0].raw, banner);
    EXPECT_NE(banner.find("GNU Common Lisp"), std::string::npos);
}

TEST(Segmenter, NoBannerBecomesPlain) {
    Segmenter s(profile("maxima"));
    s.feed("something else\n(C1) ");
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].kind, SegmentKind::plain_text);
    EXPECT_EQ(out[1].kind, SegmentKind::input_prompt);
}

TEST(Segmenter, QuestionNeedsSilence) {
    Segmenter s(profile("maxima"));
    s.feed("Is  a  positive or negative?\n");
    EXPECT_TRUE(s.drain().empty());
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::question);
    ASSERT_TRUE(out[0].question.has_value());
    EXPECT_EQ(out[0].question->answer_kind, AnswerKind::free_text);
}

TEST(Segmenter, QuestionTextMidStreamIsPlain) {
    Segmenter s(profile("maxima"));
    s.feed("Is  a  positive or negative?\n");
    s.feed("more output\n");
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].kind, SegmentKind::plain_text);
    EXPECT_FALSE(out[0].question.has_value());
    EXPECT_EQ(out[1].kind, SegmentKind::plain_text);
}

TEST(Segmenter, UnterminatedQuestionOnTick) {
    Segmenter s(profile("maxima"));
    s.feed("Row 1 Column 1: ");
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::question);
}

TEST(Segmenter, EndMarker) {
    Segmenter s(profile("mupad"));
    s.feed("The end");
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::session_end);
}

TEST(Segmenter, PlotEventPath) {
    Segmenter s(profile("mupad"));
    s.feed("Warning: Dumb terminal: Plot data saved in binary file save.mp\n");
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, SegmentKind::plot_event);
    EXPECT_EQ(out[0].plot_path, std::optional<std::string>("save.mp"));
}

TEST(Segmenter, HalfFrameRetained) {
    Segmenter s(profile("maxima"));
    const std::string part = std::string(1, kFrameOpen) + "latex:\\frac{a}{";
    s.feed(part);
    EXPECT_TRUE(s.drain().empty());
    EXPECT_TRUE(s.quiescence_tick().empty());
    EXPECT_EQ(s.buffered(), part.size());
    s.feed(std::string("b}") + kFrameClose);
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].latex, std::optional<std::string>("\\frac{a}{b}"));
}

TEST(Segmenter, FrameMidLineSplitsLine) {
    Segmenter s(profile("maxima"));
    s.feed("value: " + frame("x") + " done\n");
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].raw, "value: ");
    EXPECT_EQ(out[1].kind, SegmentKind::math);
    EXPECT_EQ(out[2].raw, " done\n");
}

TEST(Segmenter, CrLfPreserved) {
    Segmenter s(profile("reduce"));
    s.feed("abc\r\n12: ");
    const auto out = s.quiescence_tick();
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].raw, "abc\r\n");
    EXPECT_EQ(out[1].kind, SegmentKind::input_prompt);
    EXPECT_EQ(out[1].label, std::optional<std::string>("12"));
}

TEST(Segmenter, InvalidUtf8InFrame) {
    Segmenter s(profile("maxima"));
    const std::string bytes = frame("a\xff b");
    s.feed(bytes);
    const auto out = s.drain();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].raw, bytes);
    EXPECT_EQ(out[0].latex, std::optional<std::string>("a\xEF\xBF\xBD b"));
}

TEST(Segmenter, StrayControlBytesArePlain) {
    Segmenter s(profile("maxima"));
    const std::string bytes = std::string("x\x02y\x05z\n") + "\x02" + "verbatim:hi" + "\x05" + "\x1b[0m\n";
    s.feed(bytes);
    const auto out = s.quiescence_tick();
    EXPECT_EQ(concat_raw(out), bytes);
    for (const auto& seg : out) EXPECT_EQ(seg.kind, SegmentKind::plain_text);
}

TEST(Segmenter, IdempotentTick) {
    Segmenter s(profile("maxima"));
    s.feed("(C1) ");
    EXPECT_EQ(s.quiescence_tick().size(), 1u);
    EXPECT_TRUE(s.quiescence_tick().empty());
}

TEST(Segmenter, CorpusLosslessAndChunkingIndependent) {
    std::mt19937 rng(20011);
    for (const auto& c : cbt::corpora()) {
        const auto stream = corpus_stream(cbt::load_corpus(c.name));
        const auto reference = segment(c.profile, stream, whole);
        ASSERT_EQ(concat_raw(reference), stream.bytes()) << c.name;
        expect_well_formed(reference);
        EXPECT_EQ(segment(c.profile, stream, bytewise), reference) << c.name;
        for (int i = 0; i < 1000; ++i) {
            const auto segs = segment(c.profile, stream, RandomSplit{&rng});
            ASSERT_EQ(concat_raw(segs), stream.bytes()) << c.name << " chunking " << i;
            ASSERT_EQ(segs, reference) << c.name << " chunking " << i;
        }
    }
}

TEST(Segmenter, RandomBytesLossless) {
    std::mt19937 rng(7);
    const std::string alphabet = std::string("ab (C1) \n\r?:") + kFrameOpen + kFrameClose + "latex:";
    for (int i = 0; i < 500; ++i) {
        std::string s;
        const int n = std::uniform_int_distribution<int>(0, 200)(rng);
        for (int k = 0; k < n; ++k) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        Stream stream;
        stream.parts.emplace_back(s, false);
        const auto reference = segment("maxima", stream, whole);
        Segmenter tail(profile("maxima"));
        tail.feed(s);
        tail.quiescence_tick();
        // Anything left is an unterminated frame; the rest must be accounted for.
        EXPECT_EQ(concat_raw(reference).size() + tail.buffered(), s.size());
        EXPECT_EQ(concat_raw(reference), s.substr(0, concat_raw(reference).size()));
        EXPECT_EQ(segment("maxima", stream, bytewise), reference);
        EXPECT_EQ(segment("maxima", stream, RandomSplit{&rng}), reference);
    }
}
