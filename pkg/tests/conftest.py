import json

from stormwatch.corpus import Corpus, Tweet, from_tweets


def make_tweet(tweet_id, author="u1", created_at=1000, text="hello world",
               reply_to=None, is_retweet=False) -> Tweet:
    return Tweet(id=tweet_id, author_id=author, created_at=created_at,
                 text=text, reply_to=reply_to, is_retweet=is_retweet)


def corpus_of(*tweets: Tweet) -> Corpus:
    return from_tweets(tweets)


def record_line(**kwargs) -> str:
    rec = {"id": "t1", "author_id": "u1", "created_at": 1000, "text": "hi"}
    rec.update(kwargs)
    return json.dumps(rec)
