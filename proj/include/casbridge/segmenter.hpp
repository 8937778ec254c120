#pragma once

// Incremental, lossless segmentation of a backend's output stream.
//
// Bytes are fed in arbitrary chunks. Complete lines are classified with the
// backend profile as soon as their terminator arrives; a trailing partial
// line (a prompt or question waiting for input) is only classified when the
// session layer reports quiescence. LaTeX math arrives framed as
//
//     0x02 "latex:" <payload> 0x05
//
// and becomes one math segment whose raw bytes include the markers. Every
// fed byte ends up in exactly one segment raw, in order.

#include <casbridge/profiles.hpp>
#include <casbridge/text.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace casbridge {

inline constexpr char kFrameOpen = '\x02';
inline constexpr char kFrameClose = '\x05';
inline constexpr std::string_view kLatexTag = "latex:";
inline constexpr std::string_view kVerbatimTag = "verbatim:";

enum class SegmentKind {
    banner,
    input_prompt,
    aux_prompt,
    math,
    plain_text,
    question,
    plot_event,
    session_end,
};

inline std::string_view to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::banner: return "banner";
        case SegmentKind::input_prompt: return "input_prompt";
        case SegmentKind::aux_prompt: return "aux_prompt";
        case SegmentKind::math: return "math";
        case SegmentKind::plain_text: return "plain_text";
        case SegmentKind::question: return "question";
        case SegmentKind::plot_event: return "plot_event";
        case SegmentKind::session_end: return "session_end";
    }
    return "plain_text";
}

inline std::optional<SegmentKind> segment_kind_from_string(std::string_view s) {
    for (auto k : {SegmentKind::banner, SegmentKind::input_prompt, SegmentKind::aux_prompt,
                   SegmentKind::math, SegmentKind::plain_text, SegmentKind::question,
                   SegmentKind::plot_event, SegmentKind::session_end}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct Segment {
    SegmentKind kind = SegmentKind::plain_text;
    std::string raw;
    std::optional<std::string> label;
    std::optional<std::string> aux_kind;
    std::optional<std::string> latex;
    std::optional<QuestionRule> question;
    std::optional<std::string> plot_path;
    ByteRange byte_range;

    friend bool operator==(const Segment&, const Segment&) = default;
};

class Segmenter {
public:
    explicit Segmenter(std::shared_ptr<const BackendProfile> profile)
        : profile_(std::move(profile)), banner_mode_(!profile_->banner.empty()) {}

    const BackendProfile& profile() const { return *profile_; }

    void feed(std::string_view bytes) {
        if (bytes.empty()) return;
        buf_.append(bytes);
        process(false);
    }

    std::vector<Segment> drain() { return std::exchange(ready_, {}); }

    /// Reports that the stream went silent: flushes a held question line and
    /// the trailing partial line, then drains. Incomplete frames stay buffered.
    std::vector<Segment> quiescence_tick() {
        process(true);
        return drain();
    }

    /// Bytes accepted but not yet part of any emitted or held segment.
    std::size_t buffered() const { return buf_.size() + banner_buf_.size() + (held_ ? held_->raw.size() : 0); }

private:
    enum class Tag { undecided, none, latex, verbatim };

    // Classification of the bytes at `pos` (which hold kFrameOpen).
    std::pair<Tag, std::size_t> frame_tag_at(std::size_t pos) const {
        const std::string_view rest = std::string_view(buf_).substr(pos + 1);
        for (auto [tag, name] : {std::pair{Tag::latex, kLatexTag}, std::pair{Tag::verbatim, kVerbatimTag}}) {
            if (rest.size() >= name.size()) {
                if (rest.substr(0, name.size()) == name) return {tag, name.size() + 1};
            } else if (name.substr(0, rest.size()) == rest) {
                return {Tag::undecided, 0};
            }
        }
        return {Tag::none, 0};
    }

    void process(bool quiet) {
        std::size_t stop = buf_.size();  // start of an incomplete frame, if any
        for (;;) {
            if (held_ && !buf_.empty()) release_held(SegmentKind::plain_text);
            const auto p = buf_.find_first_of("\n\x02", scan_);
            if (p == std::string::npos) {
                scan_ = buf_.size();
                stop = buf_.size();
                break;
            }
            if (buf_[p] == '\n') {
                handle_line(take(p + 1), true);
                continue;
            }
            const auto [tag, tag_len] = frame_tag_at(p);
            if (tag == Tag::undecided) {
                scan_ = p;
                stop = p;
                break;
            }
            if (tag == Tag::none) {
                scan_ = p + 1;
                continue;
            }
            // A frame opened mid-line splits the line.
            if (p > 0) handle_fragment(take(p));
            const auto close = buf_.find(kFrameClose, tag_len);
            if (close == std::string::npos) {
                scan_ = 0;
                stop = 0;
                break;
            }
            end_banner_mode();
            const auto payload = std::string_view(buf_).substr(tag_len, close - tag_len);
            Segment seg;
            if (tag == Tag::latex) {
                seg.kind = SegmentKind::math;
                seg.latex = text::sanitize_utf8(payload);
                if (!profile_->math_label.empty()) {
                    std::smatch m;
                    if (profile_->math_label.search(*seg.latex, &m) && m.size() > 1 && m[1].matched) {
                        seg.label = m[1].str();
                    }
                }
            } else {
                seg.kind = SegmentKind::plain_text;
            }
            seg.raw = take(close + 1);
            emit(std::move(seg));
        }
        if (!quiet) return;
        if (held_) release_held(SegmentKind::question);
        if (stop > 0) handle_line(take(stop), false);
    }

    std::string take(std::size_t n) {
        std::string out = buf_.substr(0, n);
        buf_.erase(0, n);
        scan_ = 0;
        return out;
    }

    // Text preceding a frame on the same line: always plain.
    void handle_fragment(std::string raw) {
        end_banner_mode();
        Segment seg;
        seg.kind = SegmentKind::plain_text;
        seg.raw = std::move(raw);
        emit(std::move(seg));
    }

    void handle_line(std::string raw, bool complete) {
        const auto content = text::strip_line_terminator(raw);
        LineClass cls;
        if (content.find(kFrameOpen) == std::string_view::npos) cls = classify_line(*profile_, content);

        if (banner_mode_) {
            if (cls.kind == LineKind::plain && complete) {
                banner_buf_ += raw;
                if (profile_->banner.full_match(banner_buf_)) {
                    Segment seg;
                    seg.kind = SegmentKind::banner;
                    seg.raw = std::exchange(banner_buf_, {});
                    seg.byte_range = {consumed_, consumed_ + seg.raw.size()};
                    consumed_ += seg.raw.size();
                    ready_.push_back(std::move(seg));
                    banner_mode_ = false;
                }
                return;
            }
            end_banner_mode();
        }

        Segment seg;
        seg.raw = std::move(raw);
        switch (cls.kind) {
            case LineKind::end_marker: seg.kind = SegmentKind::session_end; break;
            case LineKind::aux_prompt:
                seg.kind = SegmentKind::aux_prompt;
                seg.aux_kind = cls.aux_kind;
                seg.label = cls.label;
                break;
            case LineKind::input_prompt:
                seg.kind = SegmentKind::input_prompt;
                seg.label = cls.label;
                break;
            case LineKind::question:
                seg.kind = SegmentKind::question;
                seg.question = *cls.question;
                if (complete) {
                    // Only a question if the stream goes silent after it.
                    seg.byte_range = {consumed_, consumed_ + seg.raw.size()};
                    consumed_ += seg.raw.size();
                    held_ = std::move(seg);
                    return;
                }
                break;
            case LineKind::plot_event:
                seg.kind = SegmentKind::plot_event;
                seg.plot_path = cls.plot_path;
                break;
            case LineKind::plain: seg.kind = SegmentKind::plain_text; break;
        }
        emit(std::move(seg));
    }

    void release_held(SegmentKind as) {
        Segment seg = std::move(*held_);
        held_.reset();
        if (as == SegmentKind::plain_text) {
            seg.kind = SegmentKind::plain_text;
            seg.question.reset();
        }
        ready_.push_back(std::move(seg));
    }

    // Leaves banner mode; lines gathered so far that never matched the
    // banner pattern become ordinary plain text.
    void end_banner_mode() {
        if (!banner_mode_) return;
        banner_mode_ = false;
        std::string pending = std::exchange(banner_buf_, {});
        std::size_t pos = 0;
        while (pos < pending.size()) {
            auto nl = pending.find('\n', pos);
            const auto end = nl == std::string::npos ? pending.size() : nl + 1;
            Segment seg;
            seg.kind = SegmentKind::plain_text;
            seg.raw = pending.substr(pos, end - pos);
            emit(std::move(seg));
            pos = end;
        }
    }

    void emit(Segment seg) {
        seg.byte_range = {consumed_, consumed_ + seg.raw.size()};
        consumed_ += seg.raw.size();
        ready_.push_back(std::move(seg));
    }

    std::shared_ptr<const BackendProfile> profile_;
    std::string buf_;
    std::size_t scan_ = 0;
    std::size_t consumed_ = 0;
    bool banner_mode_;
    std::string banner_buf_;
    std::optional<Segment> held_;
    std::vector<Segment> ready_;
};

}  // namespace casbridge
