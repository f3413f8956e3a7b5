"""
Remote classifiers and sentiment scores
========================================

A classifier behind HTTP receives ``{"text": ...}`` and answers either
with ``{"labels": [...]}`` or with a sentiment ``{"score", "magnitude"}``.
Scores are bucketed into NEGATIVE / NEUTRAL / POSITIVE before the
Jaccard comparison.  Here a stub service runs in a thread next to an
offline sentiment lexicon.
"""
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

from gramdiff import CampaignConfig, HttpClassifier, ScoredOutput, bucket_sentiment, grammars, run_campaign
from gramdiff.toys import SentimentLexicon

for score in (-0.6, -0.25, 0.0, 0.24, 0.25, 0.9):
    print(f"score {score:+.2f} -> {sorted(bucket_sentiment(ScoredOutput(score)))[0]}")

# %%
# The stub service is negative about cats and positive about everything else.


class Stub(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        text = json.loads(self.rfile.read(int(self.headers["Content-Length"])))["text"]
        body = json.dumps({"score": -0.7 if "cat" in text else 0.4, "magnitude": 1.0}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


server = HTTPServer(("127.0.0.1", 0), Stub)
threading.Thread(target=server.serve_forever, daemon=True).start()

remote = HttpClassifier("stub", f"http://127.0.0.1:{server.server_port}/", timeout=5)
local = SentimentLexicon("lexicon", {"shot": -2.0, "dog": 0.8, "cat": 0.8, "saw": 0.2})

rep = run_campaign(CampaignConfig(grammars.load("example"), local, remote, 0.5, 200, "directed", 1))
print(f"{rep.n_err} of {rep.n_inputs} unique inputs split the two sentiment readings")
for text in rep.errors[:5]:
    print("  ", text)
server.shutdown()
