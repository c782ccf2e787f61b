# Hand-labelled responses for the action-grammar corpus test. Each entry is
# (raw, thought, action, violations); re-run to regenerate grammar_corpus.jsonl.
import json, pathlib

S = lambda q: {"type": "search", "query": q}
A = lambda t: {"type": "answer", "text": t}
def R(x0, y0, x1, y1, k=None):
    d = {"type": "region", "bbox": [x0, y0, x1, y1]}
    if k is not None:
        d["target_index"] = k
    return d

CASES = [
    # well-formed, one action each
    ("<think>need data</think><search>GDP 2020 table</search>", "need data", S("GDP 2020 table"), []),
    ("<think>zoom</think><bbox>[100, 50, 300, 150]</bbox>", "zoom", R(100, 50, 300, 150), []),
    ("<think>zoom</think><region>[100, 50, 300, 150]</region>", "zoom", R(100, 50, 300, 150), []),
    ("<think>done</think><answer>42</answer>", "done", A("42"), []),
    ("<think>done</think><answer> Beijing </answer>", "done", A("Beijing"), []),
    ("<think> spaced thought </think>\n<search>  revenue by quarter  </search>", "spaced thought", S("revenue by quarter"), []),
    ("<think>a</think>\n\n<answer>\nParis\n</answer>\n", "a", A("Paris"), []),
    ("<think>crop</think><region>1,2,3,4</region>", "crop", R(1, 2, 3, 4), []),
    ("<think>crop</think><bbox>[ 0 , 0 , 10 , 10 ]</bbox>", "crop", R(0, 0, 10, 10), []),
    ("<think>crop</think><bbox>[0,0,10,10]</bbox>", "crop", R(0, 0, 10, 10), []),
    ("<think>crop</think><region>image 2: [5, 6, 70, 80]</region>", "crop", R(5, 6, 70, 80, 2), []),
    ("<think>crop</think><bbox>Image 1:[5,6,70,80]</bbox>", "crop", R(5, 6, 70, 80, 1), []),
    ("<think>crop</think><region>image 3 : 5, 6, 70, 80</region>", "crop", R(5, 6, 70, 80, 3), []),
    ("<think>multi\nline\nthought</think><search>chart of sales</search>", "multi\nline\nthought", S("chart of sales"), []),
    ("<think>x</think><search>what is 2 < 3?</search>", "x", S("what is 2 < 3?"), []),
    ("preamble text <think>t</think> middle <search>q</search> trailing", "t", S("q"), []),
    ("<think>t</think><answer>The answer is 3.5 million</answer>", "t", A("The answer is 3.5 million"), []),
    ("<think>t</think><answer>yes</answer>", "t", A("yes"), []),
    ("<think></think><search>empty thought is still a think span</search>", "", S("empty thought is still a think span"), []),
    ("<think>first</think><think>second</think><answer>z</answer>", "first", A("z"), []),
    ("<think>t</think><search>unicode café résumé</search>", "t", S("unicode café résumé"), []),
    ("<think>t</think><bbox>[0, 0, 1, 1]</bbox>", "t", R(0, 0, 1, 1), []),
    ("<think>big</think><bbox>[1000, 2000, 30000, 40000]</bbox>", "big", R(1000, 2000, 30000, 40000), []),
    ("<think>t</think><answer>Answer with <b>markup</b></answer>", "t", A("Answer with <b>markup</b>"), []),
    ("<think>look at the table</think>\t<search>\ttable 3 footnote\t</search>", "look at the table", S("table 3 footnote"), []),

    # missing think
    ("<answer> Beijing </answer>", None, A("Beijing"), ["MissingThink"]),
    ("<search>GDP</search>", None, S("GDP"), ["MissingThink"]),
    ("<bbox>[1, 2, 3, 4]</bbox>", None, R(1, 2, 3, 4), ["MissingThink"]),
    ("I think the answer is <answer>5</answer>", None, A("5"), ["MissingThink"]),
    ("<THINK>upper</THINK><answer>5</answer>", None, A("5"), ["MissingThink"]),

    # no action
    ("<think>only thinking</think>", "only thinking", None, ["NoAction"]),
    ("just some prose with no tags", None, None, ["MissingThink", "NoAction"]),
    ("", None, None, ["MissingThink", "NoAction"]),
    ("<think>t</think><SEARCH>upper case tag</SEARCH>", "t", None, ["NoAction"]),
    ("<think>t</think><query>not a tag we know</query>", "t", None, ["NoAction"]),

    # multiple actions
    ("<think>t</think><search>a</search><search>b</search>", "t", None, ["MultipleActions"]),
    ("<think>t</think><search>a</search><answer>b</answer>", "t", None, ["MultipleActions"]),
    ("<think>t</think><bbox>[1,2,3,4]</bbox><region>[1,2,3,4]</region>", "t", None, ["MultipleActions"]),
    ("<think>t</think><answer>a</answer><answer>a</answer>", "t", None, ["MultipleActions"]),
    ("<search>a</search><answer>b</answer>", None, None, ["MissingThink", "MultipleActions"]),
    ("<think>t</think><search>a</search><bbox>[3,1,2,4]</bbox>", "t", None, ["MultipleActions", "DegenerateBbox"]),

    # unclosed / unmatched tags
    ("<think>t</think><search>never closed", "t", None, ["UnclosedTag"]),
    ("<think>never closed <search>q</search>", None, S("q"), ["UnclosedTag", "MissingThink"]),
    ("<think>t</think><answer>open", "t", None, ["UnclosedTag"]),
    ("<think>t</think><bbox>[1,2,3,4]", "t", None, ["UnclosedTag"]),
    ("<think>t</think></search><answer>a</answer>", "t", A("a"), ["UnmatchedClose"]),
    ("<think>t</think><answer>a</answer></answer>", "t", A("a"), ["UnmatchedClose"]),
    ("</think><think>t</think><search>q</search>", "t", S("q"), ["UnmatchedClose"]),
    ("<think>t</think><search>q</answer>", "t", None, ["UnclosedTag", "UnmatchedClose"]),

    # bbox payload problems
    ("<think>a</think><bbox>[300,50,100,150]</bbox>", "a", None, ["DegenerateBbox"]),
    ("<think>a</think><bbox>[100,150,300,150]</bbox>", "a", None, ["DegenerateBbox"]),
    ("<think>a</think><region>[5, 5, 5, 9]</region>", "a", None, ["DegenerateBbox"]),
    ("<think>a</think><bbox>[1.5, 2, 3, 4]</bbox>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><bbox>[1, 2, 3]</bbox>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><bbox>[1, 2, 3, 4, 5]</bbox>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><bbox>[-1, 2, 3, 4]</bbox>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><bbox>top left corner</bbox>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><region></region>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><region>image 0: [1, 2, 3, 4]</region>", "a", None, ["MalformedBbox"]),
    ("<think>a</think><bbox>(1, 2, 3, 4)</bbox>", "a", None, ["MalformedBbox"]),

    # empty payloads
    ("<think>t</think><search>   </search>", "t", None, ["EmptyPayload"]),
    ("<think>t</think><answer></answer>", "t", None, ["EmptyPayload"]),
    ("<answer></answer>", None, None, ["MissingThink", "EmptyPayload"]),

    # judge tag is not an agent action
    ("<think>t</think><judge>True</judge>", "t", None, ["NoAction"]),
]

out = pathlib.Path(__file__).with_name("grammar_corpus.jsonl")
with out.open("w", encoding="utf-8") as f:
    for raw, thought, action, violations in CASES:
        f.write(json.dumps({"raw": raw, "thought": thought, "action": action,
                            "violations": sorted(violations)}, ensure_ascii=False) + "\n")
print(len(CASES), "cases")
