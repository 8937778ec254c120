#pragma once

// Profiles compiled into the binary. `casbridge profiles dump` prints the
// loaded form of these.

#include <string_view>

namespace casbridge {

inline constexpr std::string_view kBuiltinProfilesYaml = R"yaml(
profiles:
  - name: maxima
    command: [maxima, --very-quiet]
    use_pty: false
    example_prompt: '(C5) '
    input_prompt: '^\((C\d+)\) ?$'
    aux_prompts:
      - kind: debugger
        pattern: '^\(dbm:(\d+)\) ?$'
    questions:
      - pattern: '^Is\s+.+\s+positive(, negative,? or zero| or negative)\?\s*$'
        answer_kind: free_text
        label: sign
      - pattern: '^Answer 1, 2, 3 or 4 ?: ?$'
        answer_kind: menu
        label: matrix type
        answers: ['1', '2', '3', '4']
      - pattern: '^Row \d+ Column \d+: ?$'
        answer_kind: free_text
        label: matrix entry
    banner: '^GCL \(GNU Common Lisp\)[\s\S]*\(see file COPYING\)\r?\n$'
    quit_command: 'quit();'
    math_label: '^\s*\\text\{\((D\d+)\)\}'

  - name: mupad
    command: [mupad]
    use_pty: false
    example_prompt: '>> '
    input_prompt: '^(>>) ?$'
    banner: '^\s*\*----\*\s+MuPAD [\s\S]*Licensed to:[^\n]*\r?\n$'
    quit_command: 'quit'
    end_marker: 'The end'
    plot_events:
      - '^Warning: Dumb terminal: Plot data saved in binary file (\S+)\s*$'

  - name: reduce
    command: [redpsl]
    use_pty: true
    example_prompt: '12: '
    input_prompt: '^(\d+): ?$'
    questions:
      - pattern: '^Declare \S+ operator \? ?$'
        answer_kind: yes_no
        label: declare operator
        answers: ['y', 'n']
    banner: '^Loading image file[\s\S]*REDUCE [^\n]*\r?\n$'
    quit_command: 'bye;'
    end_marker: 'The end'
)yaml";

}  // namespace casbridge
