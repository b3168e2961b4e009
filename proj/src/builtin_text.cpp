#include "odm/builtin_text.hpp"

#include "odm/rng.hpp"

namespace odm {

namespace {

constexpr std::string_view kPassageA = R"(
The river town woke slowly in the grey light of the early morning. Fishing boats rocked against the old stone quay,
and the gulls argued over scraps that the night had left behind. At the bakery on the corner, the ovens had been
warm for hours, and the smell of fresh bread drifted down the narrow street toward the water. A few people were
already about. An old man walked his dog along the towpath, stopping now and then to watch the current carry
leaves and small branches toward the sea. Two children ran past him on their way to school, their bags bouncing
on their backs, laughing at some joke that only they could understand.

The town had grown up around the crossing. Long ago, before the bridge was built, travellers had waited here for
the ferry, and the inns that served them had become the first houses of the market square. Some of those buildings
still stood, leaning a little with age, their timbers dark and their windows small. The newer houses were built of
brick, and their gardens ran down to the bank in long thin strips, each with a shed or a boat or a tangle of roses at
the far end. In summer the whole valley was green and quiet, but in winter the river could rise quickly, and more
than once the water had come up into the square itself.

Most of the people who lived here worked on the land or on the water. The farms on the hills grew wheat and barley,
and in the autumn the lanes were full of tractors pulling trailers heavy with grain. The fishermen went out before
dawn and came back in the afternoon, and the catch was sold from a long wooden table beside the harbour wall. There
was also a small factory at the edge of town that made parts for machines, and a school, a church, a library, and a
doctor who had lived in the same house for nearly forty years.

On market days the square filled with stalls. There were vegetables and cheese, honey and jam, wool and leather,
knives and tools, old books and new shoes. People came in from the villages around to buy and sell, to exchange
news, and to complain about the weather, the prices, and the government, in roughly that order. The noise was
considerable. A man with a loud voice sold fruit from a cart, calling out the names of apples and pears as if they
were famous friends of his. A woman sold quilts that she had made by hand over the long winter evenings, each one
a quiet pattern of squares and stars.

In the evenings the town was quieter. The lamps came on along the quay, and their reflections stretched out across
the dark water. The inn by the bridge was the busiest place, and on most nights you could hear music from its open
windows, a fiddle and a guitar and sometimes a voice singing an old song about the sea. People sat outside at the
wooden tables when the weather allowed it, talking about the day, about their families, about the harvest and the
price of fish. Nobody was in much of a hurry. There was always time for one more story, one more drink, one more
look at the stars before walking home.

The children of the town grew up knowing the river as well as they knew their own houses. They learned to swim in
the shallow pools below the weir, to row a small boat against the current, and to tell from the colour of the water
whether rain had fallen in the hills. Some of them left when they were old enough, to study or to find work in the
cities, and some of them came back years later with children of their own. Those who stayed seldom regretted it.
Life was not easy, and there was never quite enough money, but there was a kind of peace in the slow turning of the
seasons, and in the knowledge that the river would keep flowing long after all of them were gone.

One spring a stranger arrived on the evening train. He carried a single bag and a wooden case that held, as it
turned out, a collection of maps. He took a room above the bakery and spent his days walking the paths along the
river, stopping to sketch the bends and the bridges and the shapes of the hills. People were curious about him, of
course, and within a week everybody had a theory. Some said he was a surveyor sent by the government to plan a new
road. Others said he was a writer, or a painter, or a spy. The baker, who saw him every morning, said only that he
was polite, that he paid his rent on time, and that he liked his bread very dark and very crusty.

It was the librarian who finally learned the truth. The stranger came into the library one wet afternoon and asked
whether there were any old records of the river, of floods and droughts and changes in its course. She brought him
boxes of papers that nobody had opened in decades, letters and ledgers and parish books, and he read them all with
great care, making notes in a small black notebook. He was, he explained, trying to understand how the river had
moved over the centuries, so that he could judge where it might move next. The work was slow, but he was patient,
and he seemed to enjoy it.

By the end of the summer he had drawn a new map of the valley, a map that showed not only where the river ran now
but where it had run before, a hundred years ago, five hundred years ago, even before the first houses were built.
He gave a copy to the library and another to the school, and he explained to the children how to read it. The faint
lines were the old channels, he said, and the river still remembered them. When the big floods came, the water would
try to find its old paths again. The children listened with wide eyes, and for weeks afterwards they argued about
which of their houses stood on the bed of the ancient river.

He left in the autumn, as quietly as he had come. The map still hangs in the library, a little faded now, and
visitors sometimes stop to puzzle over its tangle of lines. The river has flooded twice since then, and both times
the water followed the faint lines almost exactly, just as he had said it would. People in the town still talk
about him, and about the summer of the maps, and some of the older ones swear that on quiet nights you can still
hear the river whispering about the places it used to be.

Jack the ferryman kept a small boat by the old steps, although hardly anyone needed a ferry once the bridge was
finished. He would take visitors across for a joke, quoting a price that was far too high and then refusing to take
any money at all. His jacket was patched at both elbows, and he kept a jar of sweets in his pocket for the youngest
passengers. He knew every eddy and every sandbank, and he could tell you the exact year of every flood and frost
since his grandfather first rowed across. Quizzing him about the river was the surest way to lose an afternoon.
)";

constexpr std::string_view kPassageB = R"(
The workshop stood at the end of a gravel yard, behind a row of tall poplar trees that hissed in the wind. Inside,
the air smelled of sawdust, linseed oil, and hot metal. Benches ran along three walls, each one scarred by years of
cutting and hammering, and above them hung rows of tools, chisels and planes and saws arranged by size, every one
sharpened and oiled and returned to its place at the end of each day. The fourth wall was mostly window, and on
bright mornings the light fell across the floor in wide pale bands full of drifting dust.

The carpenter who owned the place had learned her trade from her father, who had learned it from his mother. She
made furniture for people who wanted it to last, tables and chairs and cabinets built from oak and ash and walnut,
joined without nails or screws, finished by hand with oil and wax. A good table, she liked to say, should outlive
the people who ordered it, and their children too. She was not fast, and she was not cheap, but there was always a
list of orders pinned to the board by the door, and people were usually happy to wait.

Her apprentice was a quiet young man who had arrived two winters before, asking if she needed help. He had no
experience, only a box of borrowed tools and a willingness to sweep the floor, and at first that was all she let him
do. Slowly he was given more. He learned to sharpen a blade until it could shave the hair from his arm, to read the
grain of a board and know which way it would move as the seasons changed, to cut a joint so tight that it held
without glue. He made mistakes, of course, and some of them were expensive, but he never made the same one twice.

The work had its own rhythm. In the morning they would plan the day, studying drawings and measuring timber,
choosing each board with care. Then came the rough work of sawing and planing, noisy and physical, which filled the
shop with shavings and left them both sweating even in the cold months. The afternoons were for the fine work, the
joints and the carving and the fitting, done slowly and in near silence. Sometimes a whole afternoon would go into a
single dovetail, and at the end of it there would be nothing to show but a small square of perfect wood.

Customers came to the workshop to see how their pieces were progressing. Some of them wanted to talk about every
detail, the curve of a leg or the colour of a stain, and others only wanted to know when it would be finished. A
retired judge once spent three hours choosing between two boards of cherry that looked, to the apprentice,
exactly the same. The carpenter did not mind. She said that a person who cared that much about a piece of wood
would care for the furniture too, and that was worth an afternoon of patience.

In the winter the yard froze and the trees stood bare, and the stove in the corner of the shop burned offcuts from
morning until night. Work slowed down. The timber had to be brought inside to warm before it could be cut, and the
glue took longer to set. These were the months for repairs, for old chairs with loose joints and tables split by
dry heating, for drawers that stuck and doors that would not close. The carpenter enjoyed this work more than she
admitted. Every old piece told a story, she said, if you knew how to listen to it, and the stories were often
surprising.

One cold morning a woman brought in a small wooden box that had belonged to her grandmother. The lid was cracked and
one of the hinges was missing, and the woman wanted to know if it could be saved. The carpenter turned it over in
her hands for a long time. Then she pointed out the marks of the tools that had made it, the slightly uneven
spacing of the joints, the way the maker had chosen a board with a knot in it and turned the knot into a feature,
placing it exactly in the centre of the lid. Somebody had made this with great love, she said, and a great deal of
skill, perhaps a hundred and fifty years ago.

The repair took most of a week. The crack was cleaned and glued and clamped, a new hinge was made from brass to
match the old one, and the whole box was waxed until it glowed. When the woman came back to collect it she held it
without speaking for a long moment, and then she asked how much she owed. The carpenter named a figure that was
far less than the work had cost, and when the apprentice asked her about it later, she only shrugged. Some jobs, she
told him, you do for the money, and some jobs you do for the person who made the thing in the first place.

By spring the apprentice was making his first complete piece, a simple bench of ash with four legs and a plain flat
seat. It took him a month. He cut every joint twice, because the first attempts were never quite good enough, and he
sanded the seat until his fingers were sore. When it was done the carpenter looked at it from every side, sat on
it, stood on it, and rocked it back and forth on the uneven floor. It was not perfect, she said, but it was honest,
and it would last. He took that as the highest praise he had ever received, and perhaps it was.

The bench still stands in the yard, grey now from years of sun and rain, under the poplar trees. The apprentice has
a workshop of his own in another town, with apprentices of his own, and a list of orders pinned to the board by the
door. Every year or so he drives back to visit, and the two of them sit together on the bench and talk about wood
and tools and the people they have worked for, while the trees hiss quietly above them in the wind.

Zinc buckets of varnish and jars of wax lined a shelf by the quarry tiles near the door. The yard dog, a lazy
old mixture of collie and terrier, slept beside the stove and woke only for visitors carrying sandwiches. Quite
often a joiner from the next village would drop by to borrow an awkward clamp or a vice, and the two of them would
argue cheerfully about glue and jigs and the best way to fix a warped panel, until the kettle boiled and the subject
changed to the weather.
)";

}  // namespace

std::string_view builtin_passage_a() { return kPassageA; }
std::string_view builtin_passage_b() { return kPassageB; }

Vocabulary cipher_vocab() { return build_vocab(kCipherAlphabet); }

IdSequence builtin_text(std::string_view passage, std::size_t length, std::uint64_t seed, int chain_order) {
  const Vocabulary vocab = cipher_vocab();
  std::string text = normalize_text(passage, kCipherAlphabet);
  // Strip the leading/trailing space left by the raw-string newlines.
  while (!text.empty() && text.front() == ' ') text.erase(text.begin());
  while (!text.empty() && text.back() == ' ') text.pop_back();
  const NGramModel chain = estimate_ngram({vocab.encode(text)}, vocab, chain_order, 0.0);
  Rng rng = make_rng(seed, "builtin_text");
  return sample_text(chain, length, rng);
}

}  // namespace odm
